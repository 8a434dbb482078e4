#include "voxwarp/scene.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "voxwarp/rng.hpp"

namespace voxwarp {

namespace {

double logit(double p) {
    const double c = std::clamp(p, 1e-3, 1.0 - 1e-3);
    return std::log(c / (1.0 - c));
}

uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Deterministic filler for channels past the decoded four: uniform [-1, 1).
float filler_value(uint64_t seed, int64_t vid, int channel) {
    const uint64_t h = splitmix64(seed ^ splitmix64(static_cast<uint64_t>(vid) * 64 + channel));
    return static_cast<float>(static_cast<double>(h >> 11) * 0x1.0p-53 * 2.0 - 1.0);
}

}  // namespace

void FeatureGrid::validate() const {
    for (int a = 0; a < 3; ++a)
        if (dims[a] < 2) throw std::invalid_argument("grid: each axis needs at least 2 vertices");
    if (channels < 4) throw std::invalid_argument("grid: needs at least 4 channels");
    if (features.size() != static_cast<size_t>(vertex_count()) * channels)
        throw std::invalid_argument("grid: feature array size mismatch");
    if (!(bbox.min.x < bbox.max.x && bbox.min.y < bbox.max.y && bbox.min.z < bbox.max.z))
        throw std::invalid_argument("grid: degenerate bbox");
}

VoxelCoord voxel_id(const Vec3& p, const FeatureGrid& grid) {
    if (!grid.contains(p)) throw std::invalid_argument("voxel_id: point outside bbox");
    const Vec3 cs = grid.cell_size();
    VoxelCoord vc;
    const double u[3] = {(p.x - grid.bbox.min.x) / cs.x, (p.y - grid.bbox.min.y) / cs.y,
                         (p.z - grid.bbox.min.z) / cs.z};
    double frac[3];
    for (int a = 0; a < 3; ++a) {
        int c = static_cast<int>(std::floor(u[a]));
        c = std::clamp(c, 0, grid.dims[a] - 2);
        frac[a] = std::clamp(u[a] - c, 0.0, 1.0);
        vc.cell[a] = c;
    }
    vc.frac = {frac[0], frac[1], frac[2]};
    vc.linear = vc.cell[0] +
                static_cast<int64_t>(grid.dims[0] - 1) *
                    (vc.cell[1] + static_cast<int64_t>(grid.dims[1] - 1) * vc.cell[2]);
    return vc;
}

void MlpWeights::validate() const {
    if (in_dim < 4 || hidden < 1 || hidden > kMaxMlpHidden)
        throw std::invalid_argument("mlp: bad dimensions");
    if (w1.size() != static_cast<size_t>(hidden) * in_dim || b1.size() != static_cast<size_t>(hidden) ||
        w2.size() != static_cast<size_t>(4) * hidden || b2.size() != 4)
        throw std::invalid_argument("mlp: weight array size mismatch");
}

MlpWeights identity_mlp(int in_dim) {
    if (in_dim < 4) throw std::invalid_argument("identity_mlp: needs at least 4 channels");
    MlpWeights m;
    m.in_dim = in_dim;
    m.hidden = 8;
    m.w1.assign(static_cast<size_t>(m.hidden) * in_dim, 0.0f);
    m.b1.assign(m.hidden, 0.0f);
    m.w2.assign(4 * static_cast<size_t>(m.hidden), 0.0f);
    m.b2.assign(4, 0.0f);
    for (int i = 0; i < 4; ++i) {
        m.w1[static_cast<size_t>(2 * i) * in_dim + i] = 1.0f;
        m.w1[static_cast<size_t>(2 * i + 1) * in_dim + i] = -1.0f;
        m.w2[static_cast<size_t>(i) * m.hidden + 2 * i] = 1.0f;
        m.w2[static_cast<size_t>(i) * m.hidden + 2 * i + 1] = -1.0f;
    }
    return m;
}

MlpWeights random_mlp(int in_dim, int hidden, uint64_t seed) {
    MlpWeights m;
    m.in_dim = in_dim;
    m.hidden = hidden;
    Rng rng(seed);
    auto fill = [&](std::vector<float>& v, size_t n, double scale) {
        v.resize(n);
        for (auto& x : v)
            x = half_to_float(float_to_half(static_cast<float>(rng.normal() * scale)));
    };
    fill(m.w1, static_cast<size_t>(hidden) * in_dim, 0.3);
    fill(m.b1, hidden, 0.1);
    fill(m.w2, 4 * static_cast<size_t>(hidden), 0.3);
    fill(m.b2, 4, 0.1);
    m.validate();
    return m;
}

int64_t MVoxelGrid::slot_in_block(int64_t mid, int vx, int vy, int vz) const {
    const int64_t bz = mid / (static_cast<int64_t>(mdims[0]) * mdims[1]);
    const int64_t rem = mid % (static_cast<int64_t>(mdims[0]) * mdims[1]);
    const int64_t by = rem / mdims[0];
    const int64_t bx = rem % mdims[0];
    const int lx = vx - static_cast<int>(bx) * mshape[0];
    const int ly = vy - static_cast<int>(by) * mshape[1];
    const int lz = vz - static_cast<int>(bz) * mshape[2];
    if (lx < 0 || ly < 0 || lz < 0 || lx >= capacity[0] || ly >= capacity[1] || lz >= capacity[2])
        throw std::invalid_argument("slot_in_block: vertex not resident in this MVoxel");
    return lx + static_cast<int64_t>(capacity[0]) * (ly + static_cast<int64_t>(capacity[1]) * lz);
}

std::pair<int64_t, int64_t> MVoxelGrid::vertex_home(int vx, int vy, int vz) const {
    const int64_t mid = mvoxel_of_vertex(vx, vy, vz);
    return {mid, slot_in_block(mid, vx, vy, vz)};
}

uint64_t MVoxelGrid::vertex_home_address(int vx, int vy, int vz, int channel) const {
    const auto [mid, slot] = vertex_home(vx, vy, vz);
    return block_address(mid) + (static_cast<uint64_t>(channel) * slots_per_block + slot) * 2;
}

void MVoxelGrid::copy_block(const FeatureGrid& grid, int64_t mid, std::vector<uint16_t>& out) const {
    out.assign(static_cast<size_t>(slots_per_block) * channels, 0);
    const int64_t bz = mid / (static_cast<int64_t>(mdims[0]) * mdims[1]);
    const int64_t rem = mid % (static_cast<int64_t>(mdims[0]) * mdims[1]);
    const int64_t by = rem / mdims[0];
    const int64_t bx = rem % mdims[0];
    const int x0 = static_cast<int>(bx) * mshape[0];
    const int y0 = static_cast<int>(by) * mshape[1];
    const int z0 = static_cast<int>(bz) * mshape[2];
    const int nx = std::min(capacity[0], parent_dims[0] - x0);
    const int ny = std::min(capacity[1], parent_dims[1] - y0);
    const int nz = std::min(capacity[2], parent_dims[2] - z0);
    for (int lz = 0; lz < nz; ++lz)
        for (int ly = 0; ly < ny; ++ly)
            for (int lx = 0; lx < nx; ++lx) {
                const int64_t vid = grid.vertex_id(x0 + lx, y0 + ly, z0 + lz);
                const int64_t slot =
                    lx + static_cast<int64_t>(capacity[0]) * (ly + static_cast<int64_t>(capacity[1]) * lz);
                for (int c = 0; c < channels; ++c)
                    out[static_cast<size_t>(c) * slots_per_block + slot] = grid.feature_bits(vid, c);
            }
}

MVoxelGrid partition_mvoxels(const FeatureGrid& grid, int64_t buffer_bytes, bool halo,
                             uint64_t dram_base) {
    grid.validate();
    MVoxelGrid mg;
    mg.parent_dims = grid.dims;
    mg.channels = grid.channels;
    mg.halo = halo;
    mg.dram_base = dram_base;
    mg.mshape = {8, 8, 8};
    // Plain mode tiles the vertex lattice, halo mode the cell lattice.
    for (int a = 0; a < 3; ++a)
        mg.mshape[a] = std::min(mg.mshape[a], halo ? grid.dims[a] - 1 : grid.dims[a]);

    auto resident_bytes = [&](const std::array<int, 3>& s) {
        int64_t slots = 1;
        for (int a = 0; a < 3; ++a) slots *= s[a] + (halo ? 1 : 0);
        return slots * grid.channels * 2;
    };
    while (resident_bytes(mg.mshape) > buffer_bytes) {
        int widest = 0;
        for (int a = 1; a < 3; ++a)
            if (mg.mshape[a] > mg.mshape[widest]) widest = a;
        if (mg.mshape[widest] <= 2)
            throw std::runtime_error("partition_mvoxels: buffer too small for a 2x2x2 block");
        --mg.mshape[widest];
    }

    int64_t slots = 1;
    for (int a = 0; a < 3; ++a) {
        mg.capacity[a] = mg.mshape[a] + (halo ? 1 : 0);
        const int tiled = halo ? grid.dims[a] - 1 : grid.dims[a];
        mg.mdims[a] = (tiled + mg.mshape[a] - 1) / mg.mshape[a];
        slots *= mg.capacity[a];
    }
    mg.slots_per_block = slots;
    mg.block_bytes = slots * grid.channels * 2;
    return mg;
}

// ---- Synthetic scenes ------------------------------------------------------

bool Primitive::contains(const Vec3& p) const {
    if (kind == Kind::Sphere) {
        const Vec3 d = p - center;
        return dot(d, d) <= radius * radius;
    }
    return p.x >= box.min.x && p.x <= box.max.x && p.y >= box.min.y && p.y <= box.max.y &&
           p.z >= box.min.z && p.z <= box.max.z;
}

double Primitive::ray_hit(const Vec3& origin, const Vec3& dir) const {
    const double inf = std::numeric_limits<double>::infinity();
    if (kind == Kind::Sphere) {
        const Vec3 oc = origin - center;
        const double a = dot(dir, dir);
        const double b = 2.0 * dot(oc, dir);
        const double c = dot(oc, oc) - radius * radius;
        const double disc = b * b - 4.0 * a * c;
        if (disc < 0.0) return inf;
        const double s = std::sqrt(disc);
        const double t0 = (-b - s) / (2.0 * a);
        const double t1 = (-b + s) / (2.0 * a);
        if (t0 > 0.0) return t0;
        if (t1 > 0.0) return t1;
        return inf;
    }
    double t_enter = -inf, t_exit = inf;
    const double o[3] = {origin.x, origin.y, origin.z};
    const double d[3] = {dir.x, dir.y, dir.z};
    const double lo[3] = {box.min.x, box.min.y, box.min.z};
    const double hi[3] = {box.max.x, box.max.y, box.max.z};
    for (int a = 0; a < 3; ++a) {
        if (d[a] == 0.0) {
            if (o[a] < lo[a] || o[a] > hi[a]) return inf;
            continue;
        }
        double u = (lo[a] - o[a]) / d[a];
        double v = (hi[a] - o[a]) / d[a];
        if (u > v) std::swap(u, v);
        t_enter = std::max(t_enter, u);
        t_exit = std::min(t_exit, v);
    }
    if (t_enter > t_exit) return inf;
    if (t_enter > 0.0) return t_enter;
    if (t_exit > 0.0) return t_exit;
    return inf;
}

double SyntheticScene::analytic_depth_at(const Pose& pose, const CameraIntrinsics& intr,
                                         const Vec2& px) const {
    // Camera-space direction with z = 1, so the ray parameter of a hit is
    // directly the camera-space depth Z.
    const Vec3 dir_cam{(px.x - intr.cx) / intr.f, (px.y - intr.cy) / intr.f, 1.0};
    const Vec3 dir_world = pose.rotation * dir_cam;
    double best = std::numeric_limits<double>::infinity();
    for (const Primitive& prim : spec.primitives)
        best = std::min(best, prim.ray_hit(pose.translation, dir_world));
    return best;
}

Image1f SyntheticScene::analytic_depth(const Pose& pose, const CameraIntrinsics& intr) const {
    Image1f out = make_infinite_depth(intr.width, intr.height);
    for (int y = 0; y < intr.height; ++y)
        for (int x = 0; x < intr.width; ++x) {
            const double d = analytic_depth_at(pose, intr, {x + 0.5, y + 0.5});
            out.at(x, y) = static_cast<float>(d);
        }
    return out;
}

Vec3f texture_albedo(const SceneSpec& spec, const Vec3& p) {
    const double f = spec.texture_freq;
    const double a = spec.texture_amp;
    return Vec3f{static_cast<float>(0.5 + a * std::sin(f * (p.x + 0.7 * p.z))),
                 static_cast<float>(0.5 + a * std::sin(f * (p.y + 0.4 * p.x))),
                 static_cast<float>(0.5 + a * std::sin(f * (p.z + 0.5 * p.y)))};
}

SyntheticScene build_synthetic_scene(const SceneSpec& spec) {
    SyntheticScene scene;
    scene.spec = spec;
    if (spec.textured_albedo && !(spec.texture_amp > 0.0 && spec.texture_amp < 0.5))
        throw std::invalid_argument("scene: texture_amp must lie in (0, 0.5)");
    FeatureGrid& g = scene.grid;
    g.dims = spec.dims;
    g.channels = spec.channels;
    g.bbox = spec.bbox;
    g.features.resize(static_cast<size_t>(g.vertex_count()) * g.channels);
    g.validate();

    const Vec3 cs = g.cell_size();
    for (int z = 0; z < g.dims[2]; ++z)
        for (int y = 0; y < g.dims[1]; ++y)
            for (int x = 0; x < g.dims[0]; ++x) {
                const Vec3 p{g.bbox.min.x + x * cs.x, g.bbox.min.y + y * cs.y,
                             g.bbox.min.z + z * cs.z};
                const Primitive* owner = nullptr;
                for (const Primitive& prim : spec.primitives)
                    if (prim.contains(p)) {
                        owner = &prim;
                        break;
                    }
                const int64_t vid = g.vertex_id(x, y, z);
                uint16_t* f = &g.features[static_cast<size_t>(vid) * g.channels];
                f[0] = float_to_half(owner ? spec.logit_inside : spec.logit_outside);
                const Vec3f albedo = spec.textured_albedo
                                         ? texture_albedo(spec, p)
                                         : (owner ? owner->albedo : Vec3f{0.5f, 0.5f, 0.5f});
                f[1] = float_to_half(static_cast<float>(logit(albedo.x)));
                f[2] = float_to_half(static_cast<float>(logit(albedo.y)));
                f[3] = float_to_half(static_cast<float>(logit(albedo.z)));
                for (int c = 4; c < g.channels; ++c)
                    f[c] = float_to_half(filler_value(spec.seed, vid, c));
            }

    scene.mlp = spec.identity_decode ? identity_mlp(g.channels)
                                     : random_mlp(g.channels, spec.mlp_hidden, spec.seed);
    return scene;
}

FeatureGrid random_feature_grid(std::array<int, 3> dims, int channels, const Box3& bbox,
                                uint64_t seed) {
    FeatureGrid g;
    g.dims = dims;
    g.channels = channels;
    g.bbox = bbox;
    g.features.resize(static_cast<size_t>(g.vertex_count()) * channels);
    g.validate();
    Rng rng(seed);
    for (int64_t vid = 0; vid < g.vertex_count(); ++vid) {
        uint16_t* f = &g.features[static_cast<size_t>(vid) * channels];
        f[0] = float_to_half(static_cast<float>(rng.uniform(-6.0, 2.0)));
        for (int c = 1; c < 4; ++c)
            f[c] = float_to_half(static_cast<float>(rng.uniform(-3.0, 3.0)));
        for (int c = 4; c < channels; ++c)
            f[c] = float_to_half(static_cast<float>(rng.uniform(-1.0, 1.0)));
    }
    return g;
}

// ---- Scene spec parsing ----------------------------------------------------

namespace {

std::vector<double> parse_numbers(const std::string& s, size_t expect, const std::string& what) {
    std::istringstream is(s);
    std::vector<double> out;
    double v;
    while (is >> v) out.push_back(v);
    if (out.size() != expect)
        throw std::runtime_error("scene spec: '" + what + "' expects " + std::to_string(expect) +
                                 " numbers");
    return out;
}

}  // namespace

SceneSpec parse_scene_spec(const std::string& text) {
    SceneSpec spec;
    spec.primitives.clear();
    bool have_dims = false, have_channels = false;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const size_t colon = line.find(':');
        if (colon == std::string::npos) continue;
        std::string key = line.substr(0, colon);
        std::string val = line.substr(colon + 1);
        key.erase(0, key.find_first_not_of(" \t"));
        key.erase(key.find_last_not_of(" \t") + 1);
        if (key.empty()) continue;
        if (key == "dims") {
            const auto v = parse_numbers(val, 3, key);
            spec.dims = {static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2])};
            have_dims = true;
        } else if (key == "channels") {
            spec.channels = static_cast<int>(parse_numbers(val, 1, key)[0]);
            have_channels = true;
        } else if (key == "bbox") {
            const auto v = parse_numbers(val, 6, key);
            spec.bbox = {{v[0], v[1], v[2]}, {v[3], v[4], v[5]}};
        } else if (key == "background") {
            const auto v = parse_numbers(val, 3, key);
            spec.background = {static_cast<float>(v[0]), static_cast<float>(v[1]),
                               static_cast<float>(v[2])};
        } else if (key == "density_logits") {
            const auto v = parse_numbers(val, 2, key);
            spec.logit_inside = static_cast<float>(v[0]);
            spec.logit_outside = static_cast<float>(v[1]);
        } else if (key == "seed") {
            spec.seed = static_cast<uint64_t>(parse_numbers(val, 1, key)[0]);
        } else if (key == "texture") {
            const auto v = parse_numbers(val, 3, key);
            spec.textured_albedo = v[0] != 0.0;
            spec.texture_freq = v[1];
            spec.texture_amp = v[2];
        } else if (key == "mlp") {
            std::istringstream ms(val);
            std::string kind;
            ms >> kind;
            if (kind == "identity") {
                spec.identity_decode = true;
            } else if (kind == "random") {
                spec.identity_decode = false;
                if (!(ms >> spec.mlp_hidden)) spec.mlp_hidden = 16;
            } else {
                throw std::runtime_error("scene spec: unknown mlp kind '" + kind + "'");
            }
        } else if (key == "sphere") {
            const auto v = parse_numbers(val, 7, key);
            Primitive p;
            p.kind = Primitive::Kind::Sphere;
            p.center = {v[0], v[1], v[2]};
            p.radius = v[3];
            p.albedo = {static_cast<float>(v[4]), static_cast<float>(v[5]),
                        static_cast<float>(v[6])};
            spec.primitives.push_back(p);
        } else if (key == "box") {
            const auto v = parse_numbers(val, 9, key);
            Primitive p;
            p.kind = Primitive::Kind::Box;
            p.box = {{v[0], v[1], v[2]}, {v[3], v[4], v[5]}};
            p.albedo = {static_cast<float>(v[6]), static_cast<float>(v[7]),
                        static_cast<float>(v[8])};
            spec.primitives.push_back(p);
        } else {
            throw std::runtime_error("scene spec: unknown key '" + key + "'");
        }
    }
    if (!have_dims || !have_channels)
        throw std::runtime_error("scene spec: missing required dims/channels");
    return spec;
}

SceneSpec load_scene_spec(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open scene spec: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_scene_spec(ss.str());
}

// ---- Scene container -------------------------------------------------------

namespace {

constexpr char kSceneMagic[] = "voxwarp-scene 1";

void append_halves_le(std::vector<uint8_t>& out, const uint16_t* data, size_t n) {
    for (size_t i = 0; i < n; ++i) {
        out.push_back(static_cast<uint8_t>(data[i] & 0xFF));
        out.push_back(static_cast<uint8_t>(data[i] >> 8));
    }
}

void append_floats_as_halves(std::vector<uint8_t>& out, const std::vector<float>& v) {
    for (float f : v) {
        const uint16_t h = float_to_half(f);
        out.push_back(static_cast<uint8_t>(h & 0xFF));
        out.push_back(static_cast<uint8_t>(h >> 8));
    }
}

uint16_t read_half_le(const uint8_t* p) {
    return static_cast<uint16_t>(p[0] | (static_cast<uint16_t>(p[1]) << 8));
}

}  // namespace

void save_scene(const std::string& path, const FeatureGrid& grid, const MlpWeights& mlp) {
    grid.validate();
    mlp.validate();
    if (mlp.in_dim != grid.channels)
        throw std::invalid_argument("save_scene: MLP input does not match grid channels");

    std::vector<uint8_t> payload;
    payload.reserve(grid.features.size() * 2 + (mlp.w1.size() + mlp.b1.size() + mlp.w2.size() +
                                                mlp.b2.size()) * 2);
    append_halves_le(payload, grid.features.data(), grid.features.size());
    append_floats_as_halves(payload, mlp.w1);
    append_floats_as_halves(payload, mlp.b1);
    append_floats_as_halves(payload, mlp.w2);
    append_floats_as_halves(payload, mlp.b2);

    const uint32_t crc =
        static_cast<uint32_t>(crc32(0L, payload.data(), static_cast<uInt>(payload.size())));

    std::ostringstream head;
    head << kSceneMagic << "\n";
    head << "dims: " << grid.dims[0] << " " << grid.dims[1] << " " << grid.dims[2] << "\n";
    head << "channels: " << grid.channels << "\n";
    head.precision(17);
    head << "bbox: " << grid.bbox.min.x << " " << grid.bbox.min.y << " " << grid.bbox.min.z << " "
         << grid.bbox.max.x << " " << grid.bbox.max.y << " " << grid.bbox.max.z << "\n";
    head << "mlp_dims: " << mlp.in_dim << " " << mlp.hidden << "\n";
    head << "dtype: f16\n";
    head << "payload_bytes: " << payload.size() << "\n";
    head << "payload_crc32: " << crc << "\n";
    // Fixed-width offset so the header length is known when the line is written.
    const std::string prefix = head.str();
    const size_t offset = prefix.size() + std::strlen("payload_offset: ") + 10 + 1;
    char offset_line[40];
    std::snprintf(offset_line, sizeof offset_line, "payload_offset: %010zu\n", offset);

    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << prefix << offset_line;
    f.write(reinterpret_cast<const char*>(payload.data()), payload.size());
    if (!f) throw std::runtime_error("short write: " + path);
}

LoadedScene load_scene(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open scene: " + path);
    std::string magic;
    std::getline(f, magic);
    if (magic != kSceneMagic) throw std::runtime_error("scene: bad magic in " + path);

    LoadedScene out;
    size_t payload_bytes = 0, payload_offset = 0;
    uint32_t want_crc = 0;
    bool have_offset = false;
    std::string line;
    while (!have_offset && std::getline(f, line)) {
        const size_t colon = line.find(':');
        if (colon == std::string::npos) throw std::runtime_error("scene: malformed header line");
        const std::string key = line.substr(0, colon);
        std::istringstream val(line.substr(colon + 1));
        if (key == "dims") {
            val >> out.grid.dims[0] >> out.grid.dims[1] >> out.grid.dims[2];
        } else if (key == "channels") {
            val >> out.grid.channels;
        } else if (key == "bbox") {
            val >> out.grid.bbox.min.x >> out.grid.bbox.min.y >> out.grid.bbox.min.z >>
                out.grid.bbox.max.x >> out.grid.bbox.max.y >> out.grid.bbox.max.z;
        } else if (key == "mlp_dims") {
            val >> out.mlp.in_dim >> out.mlp.hidden;
        } else if (key == "dtype") {
            std::string dt;
            val >> dt;
            if (dt != "f16") throw std::runtime_error("scene: unsupported dtype " + dt);
        } else if (key == "payload_bytes") {
            val >> payload_bytes;
        } else if (key == "payload_crc32") {
            val >> want_crc;
        } else if (key == "payload_offset") {
            val >> payload_offset;
            have_offset = true;
        } else {
            throw std::runtime_error("scene: unknown header key '" + key + "'");
        }
        if (!val && key != "dtype") throw std::runtime_error("scene: malformed value for " + key);
    }
    if (!have_offset) throw std::runtime_error("scene: truncated header in " + path);

    f.seekg(static_cast<std::streamoff>(payload_offset));
    std::vector<uint8_t> payload(payload_bytes);
    f.read(reinterpret_cast<char*>(payload.data()), payload.size());
    if (!f || f.gcount() != static_cast<std::streamsize>(payload.size()))
        throw std::runtime_error("scene: truncated payload in " + path);
    const uint32_t got_crc =
        static_cast<uint32_t>(crc32(0L, payload.data(), static_cast<uInt>(payload.size())));
    if (got_crc != want_crc) throw std::runtime_error("scene: payload CRC mismatch in " + path);

    const int64_t nfeat = out.grid.vertex_count() * out.grid.channels;
    const size_t nmlp = static_cast<size_t>(out.mlp.hidden) * out.mlp.in_dim + out.mlp.hidden +
                        4 * static_cast<size_t>(out.mlp.hidden) + 4;
    if (payload.size() != (static_cast<size_t>(nfeat) + nmlp) * 2)
        throw std::runtime_error("scene: payload size mismatch in " + path);

    out.grid.features.resize(nfeat);
    const uint8_t* p = payload.data();
    for (int64_t i = 0; i < nfeat; ++i, p += 2) out.grid.features[i] = read_half_le(p);
    auto take = [&](std::vector<float>& v, size_t n) {
        v.resize(n);
        for (size_t i = 0; i < n; ++i, p += 2) v[i] = half_to_float(read_half_le(p));
    };
    take(out.mlp.w1, static_cast<size_t>(out.mlp.hidden) * out.mlp.in_dim);
    take(out.mlp.b1, out.mlp.hidden);
    take(out.mlp.w2, 4 * static_cast<size_t>(out.mlp.hidden));
    take(out.mlp.b2, 4);
    out.grid.validate();
    out.mlp.validate();
    return out;
}

}  // namespace voxwarp
