// Python bindings. Masks cross as 2-D uint8/bool arrays, images as HxWx3
// uint8, logits as 2-D float32. Everything is copied on the way in and out.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "fcxl/crop.hpp"
#include "fcxl/dataset.hpp"
#include "fcxl/error.hpp"
#include "fcxl/eval.hpp"
#include "fcxl/mask_ops.hpp"
#include "fcxl/pipeline.hpp"
#include "fcxl/remote.hpp"
#include "fcxl/rle.hpp"
#include "fcxl/simulate.hpp"
#include "fcxl/skeleton.hpp"
#include "fcxl/slic.hpp"

namespace py = pybind11;
using namespace fcxl;

namespace {

using MaskArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

BinaryMask to_mask(const MaskArray& a) {
  if (a.ndim() != 2) throw Error("bad-shape", "mask must be 2-D");
  const Size s{static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0))};
  std::vector<std::uint8_t> d(a.data(), a.data() + a.size());
  for (auto& v : d) v = v != 0;
  return BinaryMask(s, std::move(d));
}

py::array_t<bool> from_mask(const BinaryMask& m) {
  py::array_t<bool> out({m.height(), m.width()});
  auto* p = out.mutable_data();
  const auto d = m.data();
  for (std::size_t i = 0; i < d.size(); ++i) p[i] = d[i] != 0;
  return out;
}

RgbImage to_image(const MaskArray& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw Error("bad-shape", "image must be HxWx3 uint8");
  const Size s{static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0))};
  return RgbImage(s, std::vector<std::uint8_t>(a.data(), a.data() + a.size()));
}

ScoreMap to_scores(const FloatArray& a) {
  if (a.ndim() != 2) throw Error("bad-shape", "logits must be 2-D");
  const Size s{static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0))};
  return ScoreMap(s, std::vector<float>(a.data(), a.data() + a.size()));
}

py::array_t<float> from_scores(const ScoreMap& m) {
  py::array_t<float> out({m.height(), m.width()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

py::tuple from_box(const PixelBox& b) { return py::make_tuple(b.x0, b.y0, b.x1, b.y1); }

PixelBox to_box(const std::array<int, 4>& b) { return {b[0], b[1], b[2], b[3]}; }

py::object json_to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

Interaction click_interaction(int x, int y, bool positive) {
  return {Click{x, y, positive ? Polarity::positive : Polarity::negative}};
}

// A session that owns its backend.
class PySession {
 public:
  PySession(const MaskArray& image, std::optional<MaskArray> initial, const std::string& backend,
            std::optional<MaskArray> ground_truth)
      : backend_(make_backend(backend)) {
    std::optional<BinaryMask> init;
    if (initial) init = to_mask(*initial);
    state_ = SessionState::start(to_image(image), init);
    if (ground_truth) state_.ground_truth = to_mask(*ground_truth);
  }

  py::array_t<bool> click(int x, int y, bool positive) { return round(click_interaction(x, y, positive)); }

  py::array_t<bool> box(const std::array<int, 4>& b) { return round({BoxPrompt{to_box(b)}}); }

  py::array_t<bool> coarse_mask(const MaskArray& m) { return round({CoarseMaskPrompt{to_mask(m)}}); }

  py::array_t<bool> undo() {
    fcxl::undo(state_);
    return from_mask(state_.prev_mask);
  }

  py::array_t<bool> mask() const { return from_mask(state_.prev_mask); }
  int rounds() const { return state_.round; }
  std::string backend_name() const { return backend_->name(); }

 private:
  py::array_t<bool> round(const Interaction& i) {
    {
      py::gil_scoped_release release;
      run_round(state_, *backend_, i);
    }
    return from_mask(state_.prev_mask);
  }

  std::unique_ptr<SegmenterBackend> backend_;
  SessionState state_ = SessionState::start(RgbImage(Size{1, 1}));
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the fcxl click/scribble segmentation toolkit.";

  // Messages read "<code>: <detail>"; the Python wrapper splits off the code.
  py::register_exception<Error>(m, "FcxlError", PyExc_RuntimeError);

  m.def("iou", [](const MaskArray& a, const MaskArray& b) { return iou(to_mask(a), to_mask(b)); });

  m.def(
      "eval_click",
      [](const MaskArray& gt, const MaskArray& pred) {
        const Click c = eval_click(to_mask(gt), to_mask(pred));
        return py::make_tuple(c.x, c.y, c.polarity == Polarity::positive);
      },
      py::arg("gt"), py::arg("pred"));

  m.def(
      "eval_scribble",
      [](const MaskArray& gt, const MaskArray& pred, std::optional<int> max_len_cap) {
        const ScribbleSim s = eval_scribble(to_mask(gt), to_mask(pred), max_len_cap);
        py::dict d;
        d["raster"] = from_mask(*s.scribble.raster);
        d["region"] = from_mask(s.region);
        d["positive"] = s.scribble.polarity == Polarity::positive;
        d["fell_back_to_click"] = s.fell_back_to_click;
        d["path"] = json_to_py(to_json(s.scribble.path));
        return d;
      },
      py::arg("gt"), py::arg("pred"), py::arg("max_len_cap") = std::nullopt);

  m.def(
      "slic",
      [](const MaskArray& image, int n_segments, double compactness, int iterations, std::uint64_t seed,
         double jitter) {
        SlicParams p;
        p.n_segments = n_segments;
        p.compactness = compactness;
        p.iterations = iterations;
        p.seed = seed;
        p.jitter = jitter;
        const RegionLabeling l = slic(to_image(image), p);
        py::array_t<std::int32_t> out({l.size.height, l.size.width});
        std::copy(l.labels.begin(), l.labels.end(), out.mutable_data());
        return out;
      },
      py::arg("image"), py::arg("n_segments") = 100, py::arg("compactness") = 10.0, py::arg("iterations") = 10,
      py::arg("seed") = 0, py::arg("jitter") = 0.0);

  m.def(
      "simulate_defective_mask",
      [](const MaskArray& image, const MaskArray& gt, std::uint64_t seed, double min_iou, double max_iou) {
        DefectSpec spec;
        spec.seed = seed;
        spec.min_iou = min_iou;
        spec.max_iou = max_iou;
        const DefectResult r = simulate_defective_mask(to_image(image), to_mask(gt), spec);
        std::vector<std::string> trace;
        for (DefectType t : r.trace) trace.push_back(to_string(t));
        return py::make_tuple(from_mask(r.mask), r.iou, trace);
      },
      py::arg("image"), py::arg("gt"), py::arg("seed") = 0, py::arg("min_iou") = 0.75, py::arg("max_iou") = 0.85);

  m.def(
      "perturb_mask",
      [](const MaskArray& gt, int level, std::uint64_t seed) {
        return from_mask(perturb_mask(to_mask(gt), PerturbLevel::from_int(level), seed));
      },
      py::arg("gt"), py::arg("level"), py::arg("seed") = 0);

  m.def("refine_blend", [](const FloatArray& coarse, const FloatArray& detail, const FloatArray& boundary) {
    return from_scores(refine_blend({to_scores(coarse), to_scores(detail), to_scores(boundary)}));
  });

  m.def(
      "progressive_merge",
      [](const MaskArray& prev, const MaskArray& next, std::pair<int, int> anchor, bool active) {
        return from_mask(progressive_merge(to_mask(prev), to_mask(next), {anchor.first, anchor.second}, active));
      },
      py::arg("prev"), py::arg("new_pred"), py::arg("anchor"), py::arg("active") = true);

  m.def(
      "expand_box",
      [](const std::array<int, 4>& box, double ratio, std::pair<int, int> bounds) {
        return from_box(expand(to_box(box), ratio, {bounds.first, bounds.second}));
      },
      py::arg("box"), py::arg("ratio"), py::arg("bounds"));

  m.def(
      "focus_crop",
      [](const MaskArray& prev, const MaskArray& coarse, std::pair<int, int> click, double r_fc) {
        const BinaryMask p = to_mask(prev);
        CropConfig cfg;
        cfg.r_fc = r_fc;
        return from_box(select_focus_crop(p, to_mask(coarse), {click.first, click.second}, cfg, p.size()));
      },
      py::arg("prev"), py::arg("coarse"), py::arg("click"), py::arg("r_fc") = 1.4);

  m.def("medial_axis", [](const MaskArray& mask) { return from_mask(medial_axis(to_mask(mask))); });

  m.def("rle_encode", [](const MaskArray& mask) { return json_to_py(rle_to_json(rle_encode(to_mask(mask)))); });
  m.def("rle_decode", [](const py::object& rle) {
    const auto text = py::module_::import("json").attr("dumps")(rle).cast<std::string>();
    return from_mask(rle_decode(rle_from_json(nlohmann::json::parse(text))));
  });

  m.def(
      "evaluate",
      [](const std::filesystem::path& dataset, const std::string& backend, const std::string& mode, int cap,
         std::vector<double> targets, unsigned threads, bool from_initial_mask, std::uint64_t seed) {
        EvalConfig cfg;
        cfg.mode = mode == "scribbles" ? EvalMode::scribble : EvalMode::click;
        if (mode != "clicks" && mode != "scribbles") throw Error("bad-mode", "mode must be clicks or scribbles");
        cfg.cap = cap;
        cfg.targets = std::move(targets);
        cfg.threads = threads;
        cfg.start = from_initial_mask ? StartMode::initial_mask : StartMode::scratch;
        cfg.seed = seed;
        cfg.validate();
        const Dataset ds = load_dataset(dataset);
        auto b = make_backend(backend);
        EvalReport r;
        {
          py::gil_scoped_release release;
          r = eval_interactive(*b, ds, cfg);
        }
        return json_to_py(to_json(r));
      },
      py::arg("dataset"), py::arg("backend") = "classical", py::arg("mode") = "clicks", py::arg("cap") = 20,
      py::arg("targets") = std::vector<double>{0.85, 0.90, 0.95}, py::arg("threads") = 1,
      py::arg("from_initial_mask") = false, py::arg("seed") = 0);

  py::class_<PySession>(m, "Session")
      .def(py::init<const MaskArray&, std::optional<MaskArray>, const std::string&, std::optional<MaskArray>>(),
           py::arg("image"), py::arg("initial_mask") = std::nullopt, py::arg("backend") = "classical",
           py::arg("ground_truth") = std::nullopt)
      .def("click", &PySession::click, py::arg("x"), py::arg("y"), py::arg("positive") = true)
      .def("box", &PySession::box, py::arg("box"))
      .def("coarse_mask", &PySession::coarse_mask, py::arg("mask"))
      .def("undo", &PySession::undo)
      .def_property_readonly("mask", &PySession::mask)
      .def_property_readonly("rounds", &PySession::rounds)
      .def_property_readonly("backend", &PySession::backend_name);
}
