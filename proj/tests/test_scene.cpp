#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <string>

#include "voxwarp/half.hpp"
#include "voxwarp/rng.hpp"
#include "voxwarp/scene.hpp"

using namespace voxwarp;

TEST_CASE("fp16 conversion round trips exactly representable values") {
    for (float v : {0.0f, 1.0f, -1.0f, 0.5f, -2.25f, 65504.0f, 6.103515625e-05f,
                    5.960464477539063e-08f}) {
        CHECK(half_to_float(float_to_half(v)) == v);
    }
}

TEST_CASE("fp16 quantization rounds to nearest even") {
    // 1.0 and 1.0009765625 are adjacent halves; their midpoint rounds to even.
    const float lo = 1.0f, hi = 1.0009765625f;
    const float mid = (lo + hi) / 2.0f;
    CHECK(half_to_float(quantize_half(mid)) == lo);
    CHECK(half_to_float(quantize_half(std::nextafterf(mid, 2.0f))) == hi);
}

TEST_CASE("fp16 round trip stays within half precision for random floats") {
    Rng rng(2);
    for (int i = 0; i < 1000; ++i) {
        const float v = static_cast<float>(rng.uniform(-8.0, 8.0));
        const float back = half_to_float(float_to_half(v));
        CHECK(std::fabs(back - v) <= std::fabs(v) * 0.0005f + 1e-6f);
    }
}

TEST_CASE("vertex ids enumerate the lattice without collision") {
    FeatureGrid g;
    g.dims = {3, 4, 5};
    g.channels = 4;
    g.features.assign(static_cast<size_t>(g.vertex_count()) * g.channels, 0);
    std::set<int64_t> seen;
    for (int z = 0; z < 5; ++z)
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 3; ++x) seen.insert(g.vertex_id(x, y, z));
    CHECK(static_cast<int64_t>(seen.size()) == g.vertex_count());
    CHECK(*seen.begin() == 0);
    CHECK(*seen.rbegin() == g.vertex_count() - 1);
}

TEST_CASE("voxel_id uses floor semantics and clamps the top face") {
    FeatureGrid g;
    g.dims = {5, 5, 5};
    g.channels = 1;
    g.bbox = {{0, 0, 0}, {4, 4, 4}};
    g.features.assign(static_cast<size_t>(g.vertex_count()), 0);
    const VoxelCoord a = voxel_id({1.25, 2.5, 3.75}, g);
    CHECK(a.cell[0] == 1);
    CHECK(a.cell[1] == 2);
    CHECK(a.cell[2] == 3);
    CHECK(a.frac.x == doctest::Approx(0.25));
    CHECK(a.frac.y == doctest::Approx(0.5));
    CHECK(a.frac.z == doctest::Approx(0.75));
    const VoxelCoord top = voxel_id({4.0, 4.0, 4.0}, g);
    CHECK(top.cell[0] == 3);
    CHECK(top.frac.x == doctest::Approx(1.0));
    CHECK_THROWS_AS(voxel_id({4.5, 0.0, 0.0}, g), std::invalid_argument);
}

TEST_CASE("plain partition tiles vertices into equal channel-major blocks") {
    FeatureGrid g;
    g.dims = {64, 64, 64};
    g.channels = 32;
    g.features.assign(static_cast<size_t>(g.vertex_count()) * g.channels, 0);
    const MVoxelGrid mg = partition_mvoxels(g, 32768);
    CHECK(mg.mshape[0] == 8);
    CHECK(mg.mdims[0] == 8);
    CHECK(mg.mvoxel_count() == 512);
    CHECK(mg.capacity[0] == 8);
    CHECK(mg.slots_per_block == 512);
    CHECK(mg.block_bytes == 32768);
    CHECK(!mg.halo);
}

TEST_CASE("halo partition tiles cells so every block owns at least one cell") {
    FeatureGrid g;
    g.dims = {64, 64, 64};
    g.channels = 32;
    g.features.assign(static_cast<size_t>(g.vertex_count()) * g.channels, 0);
    const MVoxelGrid mg = partition_mvoxels(g, 32768, true);
    CHECK(mg.halo);
    CHECK(mg.mshape[0] == 7);
    CHECK(mg.capacity[0] == 8);
    CHECK(mg.mdims[0] == 9);
    CHECK(mg.mvoxel_count() == 729);
    CHECK(mg.block_bytes == 32768);
    CHECK(mg.feature_bytes_total() == 729 * 32768);
    CHECK(mg.rit_base() == static_cast<uint64_t>(729 * 32768));

    FeatureGrid g2;
    g2.dims = {32, 32, 32};
    g2.channels = 32;
    g2.features.assign(static_cast<size_t>(g2.vertex_count()) * g2.channels, 0);
    const MVoxelGrid mg2 = partition_mvoxels(g2, 32768, true);
    CHECK(mg2.mdims[0] == 5);
    CHECK(mg2.mvoxel_count() == 125);
}

TEST_CASE("every vertex has exactly one home slot across halo blocks") {
    FeatureGrid g;
    g.dims = {16, 16, 16};
    g.channels = 8;
    g.features.assign(static_cast<size_t>(g.vertex_count()) * g.channels, 0);
    const MVoxelGrid mg = partition_mvoxels(g, 8192, true);
    std::set<std::pair<int64_t, int64_t>> homes;
    std::set<uint64_t> addresses;
    for (int z = 0; z < 16; ++z) {
        for (int y = 0; y < 16; ++y) {
            for (int x = 0; x < 16; ++x) {
                const auto [mid, slot] = mg.vertex_home(x, y, z);
                CHECK(mid >= 0);
                CHECK(mid < mg.mvoxel_count());
                CHECK(slot >= 0);
                CHECK(slot < mg.slots_per_block);
                homes.insert({mid, slot});
                addresses.insert(mg.vertex_home_address(x, y, z, 0));
            }
        }
    }
    CHECK(static_cast<int64_t>(homes.size()) == g.vertex_count());
    CHECK(addresses.size() == homes.size());
}

TEST_CASE("halo blocks replicate shared boundary vertices") {
    FeatureGrid g;
    g.dims = {16, 16, 16};
    g.channels = 8;
    Rng rng(5);
    g.features.resize(static_cast<size_t>(g.vertex_count()) * g.channels);
    for (auto& f : g.features) f = float_to_half(static_cast<float>(rng.uniform(-1, 1)));
    const MVoxelGrid mg = partition_mvoxels(g, 8192, true);
    // A vertex on the plane between block 0 and block 1 appears in both
    // blocks; both copies hold the same bits.
    const int boundary_x = mg.mshape[0];
    std::vector<uint16_t> block0, block1;
    mg.copy_block(g, 0, block0);
    mg.copy_block(g, 1, block1);
    const int64_t slot0 = mg.slot_in_block(0, boundary_x, 0, 0);
    const int64_t slot1 = mg.slot_in_block(1, boundary_x, 0, 0);
    for (int c = 0; c < g.channels; ++c) {
        const uint16_t want = g.feature_bits(g.vertex_id(boundary_x, 0, 0), c);
        CHECK(block0[static_cast<size_t>(c) * mg.slots_per_block + slot0] == want);
        CHECK(block1[static_cast<size_t>(c) * mg.slots_per_block + slot1] == want);
    }
}

TEST_CASE("copy_block zero-fills slots beyond the vertex lattice") {
    FeatureGrid g;
    g.dims = {10, 10, 10};
    g.channels = 4;
    g.features.assign(static_cast<size_t>(g.vertex_count()) * g.channels,
                      float_to_half(1.0f));
    const MVoxelGrid mg = partition_mvoxels(g, 4096, true);
    const int64_t last = mg.mvoxel_count() - 1;
    std::vector<uint16_t> block;
    mg.copy_block(g, last, block);
    bool saw_pad = false, saw_data = false;
    for (uint16_t b : block) {
        if (b == 0) saw_pad = true;
        if (b == float_to_half(1.0f)) saw_data = true;
        CHECK((b == 0 || b == float_to_half(1.0f)));
    }
    CHECK(saw_pad);
    CHECK(saw_data);
}

TEST_CASE("mvoxel_of_cell is consistent with slot coverage") {
    FeatureGrid g;
    g.dims = {16, 16, 16};
    g.channels = 8;
    g.features.assign(static_cast<size_t>(g.vertex_count()) * g.channels, 0);
    const MVoxelGrid mg = partition_mvoxels(g, 8192, true);
    for (int z = 0; z < 15; ++z) {
        for (int y = 0; y < 15; ++y) {
            for (int x = 0; x < 15; ++x) {
                const int64_t mid = mg.mvoxel_of_cell({x, y, z});
                // All 8 corners of the cell must be resident in that block.
                for (int k = 0; k < 8; ++k) {
                    const int vx = x + (k & 1), vy = y + ((k >> 1) & 1), vz = z + ((k >> 2) & 1);
                    const int64_t slot = mg.slot_in_block(mid, vx, vy, vz);
                    CHECK(slot >= 0);
                    CHECK(slot < mg.slots_per_block);
                }
            }
        }
    }
}

TEST_CASE("scene spec text parses primitives, texture, and rejects unknown keys") {
    const std::string text =
        "# comment\n"
        "dims: 32 32 32\n"
        "channels: 8\n"
        "bbox: -1 -1 2 1 1 4\n"
        "background: 0.1 0.2 0.3\n"
        "texture: 1 2.5 0.25\n"
        "sphere: 0 0 3 0.8 0.5 0.5 0.5\n"
        "box: -1 -1 2 1 1 2.5 0.2 0.3 0.4\n";
    const SceneSpec spec = parse_scene_spec(text);
    CHECK(spec.dims[0] == 32);
    CHECK(spec.channels == 8);
    CHECK(spec.bbox.min.z == 2.0);
    CHECK(spec.background.y == 0.2f);
    CHECK(spec.textured_albedo);
    CHECK(spec.texture_freq == 2.5);
    CHECK(spec.texture_amp == 0.25);
    REQUIRE(spec.primitives.size() == 2);
    CHECK(spec.primitives[0].kind == Primitive::Kind::Sphere);
    CHECK(spec.primitives[1].kind == Primitive::Kind::Box);
    CHECK_THROWS(parse_scene_spec("dims: 8 8 8\nchannels: 4\nbogus: 1\n"));
    CHECK_THROWS(parse_scene_spec("channels: 4\n"));
}

TEST_CASE("synthetic scene rasterizes density logits at vertices") {
    SceneSpec spec;
    spec.dims = {16, 16, 16};
    spec.channels = 8;
    spec.bbox = {{-1, -1, 2}, {1, 1, 4}};
    Primitive p;
    p.kind = Primitive::Kind::Sphere;
    p.center = {0, 0, 3};
    p.radius = 0.8;
    spec.primitives.push_back(p);
    const SyntheticScene scene = build_synthetic_scene(spec);
    // Vertex nearest the center is inside, a corner vertex is outside.
    int cx = 0, cy = 0, cz = 0;
    double best = 1e9;
    for (int z = 0; z < 16; ++z)
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 16; ++x) {
                const Vec3 pos{-1 + 2.0 * x / 15, -1 + 2.0 * y / 15, 2 + 2.0 * z / 15};
                const double d = norm(pos - Vec3{0, 0, 3});
                if (d < best) {
                    best = d;
                    cx = x;
                    cy = y;
                    cz = z;
                }
            }
    CHECK(scene.grid.feature(scene.grid.vertex_id(cx, cy, cz), 0) ==
          half_to_float(float_to_half(spec.logit_inside)));
    CHECK(scene.grid.feature(scene.grid.vertex_id(0, 0, 0), 0) ==
          half_to_float(float_to_half(spec.logit_outside)));
}

TEST_CASE("texture albedo stays strictly inside (0, 1) and varies") {
    SceneSpec spec;
    spec.textured_albedo = true;
    spec.texture_amp = 0.3;
    Rng rng(9);
    float lo = 1.0f, hi = 0.0f;
    for (int i = 0; i < 500; ++i) {
        const Vec3 p{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
        const Vec3f a = texture_albedo(spec, p);
        for (float v : {a.x, a.y, a.z}) {
            CHECK(v > 0.0f);
            CHECK(v < 1.0f);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    CHECK(hi - lo > 0.3f);
}

TEST_CASE("textured scenes reject amplitudes that reach the logit poles") {
    SceneSpec spec;
    spec.dims = {8, 8, 8};
    spec.channels = 8;
    spec.textured_albedo = true;
    spec.texture_amp = 0.5;
    CHECK_THROWS(build_synthetic_scene(spec));
}

TEST_CASE("analytic depth matches sphere geometry on the central ray") {
    SceneSpec spec;
    spec.dims = {8, 8, 8};
    spec.channels = 8;
    spec.bbox = {{-1, -1, 2}, {1, 1, 4}};
    Primitive p;
    p.kind = Primitive::Kind::Sphere;
    p.center = {0, 0, 3};
    p.radius = 0.8;
    spec.primitives.push_back(p);
    const SyntheticScene scene = build_synthetic_scene(spec);
    CameraIntrinsics intr;
    intr.f = 64;
    intr.cx = 32;
    intr.cy = 32;
    intr.width = 64;
    intr.height = 64;
    const double d = scene.analytic_depth_at(Pose{}, intr, {32.0, 32.0});
    CHECK(d == doctest::Approx(2.2).epsilon(1e-12));
    const double miss = scene.analytic_depth_at(Pose{}, intr, {1.0, 1.0});
    CHECK(std::isinf(miss));
}

TEST_CASE("random feature grids are reproducible by seed") {
    const Box3 bbox{{-1, -1, -1}, {1, 1, 1}};
    const FeatureGrid a = random_feature_grid({6, 6, 6}, 8, bbox, 42);
    const FeatureGrid b = random_feature_grid({6, 6, 6}, 8, bbox, 42);
    const FeatureGrid c = random_feature_grid({6, 6, 6}, 8, bbox, 43);
    CHECK(a.features == b.features);
    CHECK(a.features != c.features);
}

TEST_CASE("identity mlp decode passes features straight through") {
    const MlpWeights mlp = identity_mlp(8);
    mlp.validate();
    CHECK(mlp.in_dim == 8);
    const MlpWeights rnd = random_mlp(8, 16, 7);
    rnd.validate();
    CHECK(rnd.hidden == 16);
    CHECK(rnd.w1.size() == 16 * 8);
}

TEST_CASE("scene container round trips bit-exactly through disk") {
    const Box3 bbox{{-1, -1, -1}, {1, 1, 1}};
    const FeatureGrid grid = random_feature_grid({5, 6, 7}, 8, bbox, 11);
    const MlpWeights mlp = random_mlp(8, 12, 3);
    const std::string path = "/tmp/voxwarp_scene_test.bin";
    save_scene(path, grid, mlp);
    const LoadedScene back = load_scene(path);
    CHECK(back.grid.dims == grid.dims);
    CHECK(back.grid.channels == grid.channels);
    CHECK(back.grid.features == grid.features);
    CHECK(back.grid.bbox.min.x == grid.bbox.min.x);
    CHECK(back.mlp.w1 == mlp.w1);
    CHECK(back.mlp.b2 == mlp.b2);
    std::remove(path.c_str());
}

TEST_CASE("grids must have at least two vertices per axis") {
    FeatureGrid g;
    g.dims = {1, 4, 4};
    g.channels = 2;
    g.features.assign(static_cast<size_t>(g.vertex_count()) * g.channels, 0);
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
}
