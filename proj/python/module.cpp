#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <vector>

#include "voxwarp/harness.hpp"
#include "voxwarp/image.hpp"
#include "voxwarp/trace.hpp"

namespace py = pybind11;
using namespace voxwarp;

namespace {

Pose pose_from_list(const std::vector<double>& v) {
    if (v.size() != 12) throw std::invalid_argument("a pose is 12 numbers, row-major 3x4 [R|t]");
    double m[12];
    std::copy(v.begin(), v.end(), m);
    return pose_from_row_major(m);
}

std::vector<double> pose_to_list(const Pose& p) {
    double m[12];
    pose_to_row_major(p, m);
    return std::vector<double>(m, m + 12);
}

py::array_t<float> color_array(const Image3f& img) {
    py::array_t<float> arr({img.height, img.width, 3});
    auto a = arr.mutable_unchecked<3>();
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const Vec3f c = img.at(x, y);
            a(y, x, 0) = c.x;
            a(y, x, 1) = c.y;
            a(y, x, 2) = c.z;
        }
    }
    return arr;
}

py::array_t<float> scalar_array(const Image1f& img) {
    py::array_t<float> arr({img.height, img.width});
    auto a = arr.mutable_unchecked<2>();
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) a(y, x) = img.at(x, y);
    return arr;
}

Image3f image_from_array(const py::array_t<float, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 3 || arr.shape(2) != 3)
        throw std::invalid_argument("expected an (H, W, 3) float array");
    Image3f img(static_cast<int>(arr.shape(1)), static_cast<int>(arr.shape(0)));
    auto a = arr.unchecked<3>();
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) img.at(x, y) = {a(y, x, 0), a(y, x, 1), a(y, x, 2)};
    return img;
}

struct SceneHandle {
    SyntheticScene scene;
};

RenderConfig make_render_config(const SceneHandle& s, int samples, double near, double far,
                                int workers) {
    RenderConfig rcfg;
    rcfg.n_samples = samples;
    rcfg.near = near;
    rcfg.far = far;
    rcfg.workers = workers;
    rcfg.background = s.scene.spec.background;
    return rcfg;
}

py::dict frame_dict(const Frame& f) {
    py::dict d;
    d["color"] = color_array(f.color);
    d["depth"] = scalar_array(f.depth);
    d["opacity"] = scalar_array(f.opacity);
    return d;
}

MemLevel parse_level(const std::string& s) {
    if (s == "dram") return MemLevel::Dram;
    if (s == "sram") return MemLevel::Sram;
    throw std::invalid_argument("level must be dram or sram");
}

AccessKind parse_kind(const std::string& s) {
    if (s == "feature") return AccessKind::Feature;
    if (s == "rit") return AccessKind::Rit;
    if (s == "weights") return AccessKind::Weights;
    throw std::invalid_argument("kind must be feature, rit, or weights");
}

}  // namespace

PYBIND11_MODULE(_voxwarp, m) {
    m.doc() = "voxel-grid NeRF rendering with sparse radiance warping and "
              "trace-driven memory-system simulation";

    py::class_<SceneHandle>(m, "Scene")
        .def(py::init([](const std::string& builtin, uint64_t seed) {
                 return SceneHandle{build_synthetic_scene(builtin_scene_spec(builtin, seed))};
             }),
             py::arg("builtin") = "toy", py::arg("seed") = 1)
        .def_static(
            "from_spec",
            [](const std::string& text) {
                return SceneHandle{build_synthetic_scene(parse_scene_spec(text))};
            },
            py::arg("text"))
        .def_property_readonly(
            "dims", [](const SceneHandle& s) { return s.scene.grid.dims; })
        .def_property_readonly(
            "channels", [](const SceneHandle& s) { return s.scene.grid.channels; });

    m.def("builtin_trajectory",
          [](const std::string& name, int frames, double orbit_deg, double lateral_step) {
              std::vector<std::vector<double>> out;
              for (const Pose& p : builtin_trajectory(name, frames, orbit_deg, lateral_step))
                  out.push_back(pose_to_list(p));
              return out;
          },
          py::arg("name") = "orbit", py::arg("frames") = 17, py::arg("orbit_deg") = 1.5,
          py::arg("lateral_step") = 0.05);

    m.def("render_frame",
          [](const SceneHandle& s, const std::vector<double>& pose, int width, int height,
             int samples, double near, double far, int workers, const std::string& mode,
             int64_t buffer_bytes) {
              const CameraIntrinsics intr = default_intrinsics(width, height);
              const RenderConfig rcfg = make_render_config(s, samples, near, far, workers);
              const Pose p = pose_from_list(pose);
              Frame f;
              if (mode == "pixel-centric") {
                  f = render_frame(s.scene.grid, s.scene.mlp, p, intr, rcfg);
              } else if (mode == "memory-centric") {
                  const MVoxelGrid mg = partition_mvoxels(s.scene.grid, buffer_bytes, true);
                  f = render_memory_centric(s.scene.grid, s.scene.mlp, mg, p, intr, rcfg).frame;
              } else if (mode == "downsample-2") {
                  f = downsample2_render(s.scene.grid, s.scene.mlp, p, intr, rcfg);
              } else {
                  throw std::invalid_argument("mode must be pixel-centric, memory-centric, or "
                                              "downsample-2");
              }
              return frame_dict(f);
          },
          py::arg("scene"), py::arg("pose"), py::arg("width") = 64, py::arg("height") = 64,
          py::arg("samples") = 128, py::arg("near") = 0.1, py::arg("far") = 6.0,
          py::arg("workers") = 1, py::arg("mode") = "pixel-centric",
          py::arg("buffer_bytes") = 32768);

    m.def("warp_sequence",
          [](const SceneHandle& s, const std::vector<std::vector<double>>& poses, int width,
             int height, int window, double phi, const std::string& mode, int samples,
             double near, double far, int workers, bool compute_psnr) {
              std::vector<Pose> traj;
              for (const auto& row : poses) traj.push_back(pose_from_list(row));
              SequenceConfig scfg;
              scfg.render = make_render_config(s, samples, near, far, workers);
              scfg.warp.window = window;
              scfg.warp.phi = phi;
              scfg.compute_psnr = compute_psnr;
              if (mode == "sparw") scfg.mode = SequenceMode::SpaRW;
              else if (mode == "temp-warp") scfg.mode = SequenceMode::TempWarp;
              else throw std::invalid_argument("mode must be sparw or temp-warp");
              const CameraIntrinsics intr = default_intrinsics(width, height);
              const SequenceResult res = run_sequence(traj, s.scene, intr, scfg);
              py::list ledger;
              double psnr_sum = 0.0;
              int psnr_count = 0;
              for (const LedgerRow& row : res.ledger) {
                  py::dict d;
                  d["frame"] = row.frame;
                  d["kind"] = row.kind;
                  d["warped_px"] = row.warped_px;
                  d["sparse_px"] = row.sparse_px;
                  d["void_px"] = row.void_px;
                  d["psnr_vs_full"] = row.psnr_vs_full;
                  ledger.append(d);
                  if (!std::isinf(row.psnr_vs_full)) {
                      psnr_sum += row.psnr_vs_full;
                      ++psnr_count;
                  }
              }
              py::dict out;
              out["ledger"] = ledger;
              out["mean_psnr_db"] = psnr_count > 0
                                        ? psnr_sum / psnr_count
                                        : std::numeric_limits<double>::infinity();
              out["reference_renders"] = res.reference_renders;
              out["sparse_pixels"] = res.sparse_pixels;
              out["full_render_pixels"] = res.full_render_pixels;
              out["last_frame"] = frame_dict(res.frames.back());
              return out;
          },
          py::arg("scene"), py::arg("poses"), py::arg("width") = 64, py::arg("height") = 64,
          py::arg("window") = 16, py::arg("phi") = std::numeric_limits<double>::infinity(),
          py::arg("mode") = "sparw", py::arg("samples") = 128, py::arg("near") = 0.1,
          py::arg("far") = 6.0, py::arg("workers") = 1, py::arg("compute_psnr") = true);

    m.def("psnr",
          [](const py::array_t<float, py::array::c_style | py::array::forcecast>& a,
             const py::array_t<float, py::array::c_style | py::array::forcecast>& b) {
              return psnr(image_from_array(a), image_from_array(b));
          },
          py::arg("a"), py::arg("b"));

    m.def("remote_cost",
          [](int64_t nbytes) {
              const RemoteCost rc = remote_model(nbytes, EnergyModel{});
              return py::make_tuple(rc.tx_latency_s, rc.tx_energy_j);
          },
          py::arg("nbytes"));

    m.def("trace_stats",
          [](const std::vector<std::tuple<std::string, std::string, uint64_t, int64_t>>& events,
             int64_t burst) {
              AccessTrace trace;
              for (const auto& [level, kind, addr, size] : events)
                  trace.add(parse_level(level), parse_kind(kind), addr, size);
              const TraceStats st = classify_trace(trace, burst);
              py::dict d;
              d["streaming_fraction"] = st.streaming_fraction;
              d["bytes_total"] = st.bytes_total;
              d["unique_bytes"] = st.unique_bytes;
              d["redundancy_ratio"] = st.redundancy_ratio;
              d["events"] = st.events;
              return d;
          },
          py::arg("events"), py::arg("burst") = 64);

    m.def("run_experiment",
          [](const std::string& config_text) {
              const ExperimentConfig cfg = parse_experiment_config(config_text);
              const ExperimentResult res = run_experiment(cfg);
              py::dict summary;
              for (const auto& [k, v] : res.summary) summary[py::str(k)] = v;
              py::dict out;
              out["out_dir"] = res.out_dir;
              out["frames_written"] = res.frames_written;
              out["summary"] = summary;
              return out;
          },
          py::arg("config_text"));
}
