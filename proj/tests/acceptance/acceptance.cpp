// Acceptance gate: one PASS/FAIL line per primary criterion. Exit status is
// the number of failed criteria.

#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <functional>
#include <future>
#include <map>
#include <mutex>
#include <string>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "fcxl/crop.hpp"
#include "fcxl/eval.hpp"
#include "fcxl/geodesic.hpp"
#include "fcxl/mask_ops.hpp"
#include "fcxl/oracles.hpp"
#include "fcxl/pipeline.hpp"
#include "fcxl/rle.hpp"
#include "fcxl/service.hpp"
#include "fcxl/simulate.hpp"
#include "fcxl/skeleton.hpp"
#include "fcxl/slic.hpp"
#include "support.hpp"

using namespace fcxl;
using namespace fcxl::testing;
using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& why) {
    if (!ok && pass) {
      pass = false;
      detail = why;
    }
  }
};

int failures = 0;

void criterion(const std::string& name, double time_limit_s, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  if (time_limit_s > 0 && secs > time_limit_s) o.require(false, "runtime over " + std::to_string(time_limit_s) + " s");
  std::printf("%s %-28s %7.2fs  %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), secs, o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a, b, c);
  return buf;
}

// Synthetic ground truths of at least 300 px over two-tone noisy images.
std::vector<std::pair<RgbImage, BinaryMask>> defect_fixtures(int n) {
  std::vector<std::pair<RgbImage, BinaryMask>> out;
  Rng rng(2024);
  while (static_cast<int>(out.size()) < n) {
    const Size s{rng.uniform_int(64, 96), rng.uniform_int(64, 96)};
    const BinaryMask gt = out.size() % 2 ? ellipse_mask(s, s.width / 2.0, s.height / 2.0, rng.uniform(10, 24),
                                                        rng.uniform(10, 24))
                                         : random_blobs(s, rng, 2) | ellipse_mask(s, s.width / 2.0, s.height / 2.0,
                                                                                  12, 10);
    if (gt.count() < 300) continue;
    out.emplace_back(two_tone(gt, {200, 80, 50}, {40, 90, 180}, &rng, 30), gt);
  }
  return out;
}

Dataset fixture_dataset(int n, const std::string& name) {
  std::vector<FixtureSample> samples;
  for (int i = 0; i < n; ++i) samples.push_back(two_tone_fixture(i));
  const auto root = temp_dir(name);
  write_dataset(root, samples);
  return load_dataset(root);
}

Outcome alg1_bounds() {
  Outcome o;
  const auto fixtures = defect_fixtures(10);
  std::array<long, 3> counts{0, 0, 0};
  long draws = 0;
  double lo = 1.0;
  double hi = 0.0;
  for (int run = 0; run < 200; ++run) {
    const auto& [img, gt] = fixtures[static_cast<std::size_t>(run) % fixtures.size()];
    DefectSpec spec;
    spec.seed = static_cast<std::uint64_t>(run);
    const DefectResult r = simulate_defective_mask(img, gt, spec);
    const double v = iou(r.mask, gt);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    o.require(v >= 0.75 && v <= 0.85, fmt("run %.0f IoU %.4f outside [0.75, 0.85]", run, v));
    for (DefectType t : r.trace) {
      if (draws < 1000) ++counts[static_cast<std::size_t>(t)];
      ++draws;
    }
  }
  // Top up to 1000 error-type draws with further seeded runs.
  for (int run = 200; draws < 1000 && run < 2000; ++run) {
    const auto& [img, gt] = fixtures[static_cast<std::size_t>(run) % fixtures.size()];
    DefectSpec spec;
    spec.seed = static_cast<std::uint64_t>(run);
    for (DefectType t : simulate_defective_mask(img, gt, spec).trace) {
      if (draws < 1000) ++counts[static_cast<std::size_t>(t)];
      ++draws;
    }
  }
  o.require(draws >= 1000, "fewer than 1000 error-type draws");
  const std::array<double, 3> want{0.65, 0.25, 0.10};
  std::string freq;
  for (std::size_t k = 0; k < 3; ++k) {
    const double f = static_cast<double>(counts[k]) / 1000.0;
    freq += fmt("%.3f ", f);
    o.require(std::abs(f - want[k]) <= 0.05, fmt("type %.0f frequency %.3f vs %.2f", double(k), f, want[k]));
  }
  if (o.pass) o.detail = fmt("200 runs IoU in [%.4f, %.4f]; ", lo, hi) + "freq " + freq;
  return o;
}

Outcome perturb_levels() {
  Outcome o;
  Rng rng(77);
  std::vector<BinaryMask> gts;
  for (int i = 0; i < 10; ++i) {
    gts.push_back(ellipse_mask({80, 80}, rng.uniform(30, 50), rng.uniform(30, 50), rng.uniform(12, 24),
                               rng.uniform(12, 24)));
  }
  int out_of_range = 0;
  for (int level = 1; level <= 5; ++level) {
    const auto l = PerturbLevel::from_int(level);
    for (int i = 0; i < 100; ++i) {
      const BinaryMask& gt = gts[static_cast<std::size_t>(i) % gts.size()];
      const double v = iou(gt, perturb_mask(gt, l, static_cast<std::uint64_t>(level * 1000 + i)));
      if (v < l.lo() || v > l.hi()) ++out_of_range;
    }
  }
  o.require(out_of_range == 0, fmt("%.0f of 500 outputs out of range", out_of_range));
  if (o.pass) o.detail = "500 outputs, 0 out of range";
  return o;
}

Outcome eq1_identities() {
  Outcome o;
  Rng rng(1);
  const Size s{256, 256};
  auto random_map = [&] {
    ScoreMap m(s);
    for (auto& v : m.data()) v = static_cast<float>(rng.uniform(-8.0, 8.0));
    return m;
  };
  const ScoreMap ml = random_map();
  const ScoreMap md = random_map();
  double e_pos = 0.0, e_neg = 0.0, e_mid = 0.0;
  const ScoreMap pos = refine_blend({ml, md, ScoreMap(s, 30.0f)});
  const ScoreMap neg = refine_blend({ml, md, ScoreMap(s, -30.0f)});
  const ScoreMap mid = refine_blend({ml, md, ScoreMap(s, 0.0f)});
  for (std::size_t i = 0; i < s.area(); ++i) {
    e_pos = std::max(e_pos, double(std::abs(pos.data()[i] - md.data()[i])));
    e_neg = std::max(e_neg, double(std::abs(neg.data()[i] - ml.data()[i])));
    e_mid = std::max(e_mid, std::abs(mid.data()[i] - 0.5 * (double(ml.data()[i]) + md.data()[i])));
  }
  o.require(e_pos <= 1e-6 && e_neg <= 1e-6 && e_mid <= 1e-6, fmt("max errors %.2e %.2e %.2e", e_pos, e_neg, e_mid));
  if (o.pass) o.detail = fmt("max |err| +30: %.1e, -30: %.1e, mid: %.1e", e_pos, e_neg, e_mid);
  return o;
}

Outcome merge_preservation() {
  Outcome o;
  Rng rng(3);
  const Size s{64, 64};
  for (int i = 0; i < 1000 && o.pass; ++i) {
    const BinaryMask prev = random_blobs(s, rng, 3, i % 2 ? 0.02 : 0.0);
    const BinaryMask next = random_blobs(s, rng, 3, i % 3 ? 0.02 : 0.0);
    const Pixel anchor{rng.uniform_int(0, 63), rng.uniform_int(0, 63)};
    o.require(progressive_merge(prev, next, anchor, false) == next, fmt("inactive merge differs (case %.0f)", i));
    const BinaryMask merged = progressive_merge(prev, next, anchor, true);
    const BinaryMask region = bf_anchored(xor_diff(prev, next), anchor);
    for (std::size_t k = 0; k < merged.data().size(); ++k) {
      const auto want = region.data()[k] ? next.data()[k] : prev.data()[k];
      if (merged.data()[k] != want) {
        o.require(false, fmt("case %.0f pixel %.0f differs", i, double(k)));
        break;
      }
    }
  }
  if (o.pass) o.detail = "1000 triples bit-exact";
  return o;
}

Outcome deterministic_scribble() {
  Outcome o;
  Rng rng(5);
  int fixtures = 0;
  int graphs = 0;
  while (fixtures < 50) {
    const Size s{rng.uniform_int(24, 64), rng.uniform_int(24, 64)};
    const BinaryMask gt = random_blobs(s, rng, 2);
    const BinaryMask pred = random_blobs(s, rng, 2);
    if (gt == pred) continue;
    ++fixtures;
    const ScribbleSim a = eval_scribble(gt, pred);
    const ScribbleSim b = eval_scribble(gt, pred);
    o.require(a.scribble.raster && b.scribble.raster && *a.scribble.raster == *b.scribble.raster,
              fmt("fixture %.0f not reproducible", fixtures));
    BinaryMask error(s);
    for (std::size_t k = 0; k < error.data().size(); ++k) error.data()[k] = gt.data()[k] != pred.data()[k];
    const BinaryMask largest = bf_largest(error);
    o.require(subset_of(*a.scribble.raster, bf_dilate_disk(largest, 3)), fmt("fixture %.0f escapes dilation", fixtures));

    const SkeletonGraph forest = break_cycles(build_radius_graph(medial_axis(largest)));
    if (forest.vertices.empty() || forest.vertices.size() > 200) continue;
    ++graphs;
    const GraphPath p = longest_path(forest);
    const auto got = exact_path_length(forest, p.vertices);
    o.require(got.has_value() && *got == bf_diameter(forest), fmt("fixture %.0f longest path differs", fixtures));
  }
  o.require(graphs >= 20, "too few graphs checked");
  if (o.pass) o.detail = fmt("50 fixtures byte-identical; %.0f graphs exact vs all-pairs", graphs);
  return o;
}

Outcome click_oracle() {
  Outcome o;
  Rng rng(9);
  int checked = 0;
  while (checked < 500) {
    const Size s{rng.uniform_int(2, 64), rng.uniform_int(2, 64)};
    const BinaryMask gt = random_blobs(s, rng, 2, checked % 4 == 0 ? 0.03 : 0.0);
    const BinaryMask pred = random_blobs(s, rng, 2);
    if (gt == pred) continue;
    ++checked;
    BinaryMask error(s);
    for (std::size_t k = 0; k < error.data().size(); ++k) error.data()[k] = gt.data()[k] != pred.data()[k];
    const auto want = bf_deepest(bf_largest(error));
    const Click c = eval_click(gt, pred);
    o.require(want && c.pixel() == *want, fmt("mask %.0f: click differs from brute force", checked));
    o.require(c.polarity == (gt.at(c.pixel()) ? Polarity::positive : Polarity::negative), "wrong polarity");
  }
  if (o.pass) o.detail = "500 masks exact";
  return o;
}

Outcome protocol_sanity() {
  Outcome o;
  const Dataset ds = fixture_dataset(20, "acc_protocol");
  EvalConfig cfg;
  PerfectOracle perfect;
  auto r = eval_interactive(perfect, ds, cfg);
  o.require(r.aggregates.at("NoC90") == 1.0 && r.aggregates.at("NoF90") == 0.0,
            fmt("perfect NoC90 %.2f NoF90 %.0f", r.aggregates.at("NoC90"), r.aggregates.at("NoF90")));
  std::string detail = "perfect 1/0";
  for (int k : {2, 3, 5}) {
    DelayOracle delay(k);
    r = eval_interactive(delay, ds, cfg);
    o.require(r.aggregates.at("NoC90") == k, fmt("delay %.0f NoC90 %.2f", k, r.aggregates.at("NoC90")));
    detail += fmt("; delay%.0f %.1f", k, r.aggregates.at("NoC90"));
  }
  NeverOracle never;
  r = eval_interactive(never, ds, cfg);
  o.require(r.aggregates.at("NoC90") == 20.0 && r.aggregates.at("NoF90") == 20.0,
            fmt("never NoC90 %.2f NoF90 %.0f", r.aggregates.at("NoC90"), r.aggregates.at("NoF90")));
  detail += fmt("; never %.1f/%.0f", r.aggregates.at("NoC90"), r.aggregates.at("NoF90"));
  if (o.pass) o.detail = detail;
  return o;
}

Outcome crop_geometry() {
  Outcome o;
  double worst = 0.0;
  for (int w = 1; w <= 64; w += 3) {
    for (int h = 1; h <= 64; h += 5) {
      for (const Size target : {Size{384, 384}, Size{256, 256}, Size{17, 29}}) {
        const CropTransform t({3, 5, 3 + w, 5 + h}, target);
        for (int y = 5; y < 5 + h; ++y) {
          for (int x = 3; x < 3 + w; ++x) {
            const PointF c{x + 0.5, y + 0.5};
            const PointF m = t.apply_to_point(c);
            const PointF back = t.invert_point(m);
            worst = std::max({worst, std::abs(back.x - c.x), std::abs(back.y - c.y)});
            const Pixel q = t.apply_to_pixel({x, y});
            worst = std::max({worst, std::abs(m.x - (q.x + 0.5)), std::abs(m.y - (q.y + 0.5))});
            if (target.width >= w && target.height >= h && t.invert_pixel(q) != Pixel{x, y}) worst = 1.0;
          }
        }
      }
    }
  }
  o.require(worst <= 0.5, fmt("round-trip error %.3f px", worst));
  o.require(expand({45, 45, 55, 55}, 1.4, {100, 100}) == PixelBox{43, 43, 57, 57}, "centered-box expand differs");
  Rng rng(11);
  const CropConfig cfg;
  int cases = 0;
  while (cases < 100) {
    const Size s{rng.uniform_int(8, 64), rng.uniform_int(8, 64)};
    const BinaryMask prev = random_blobs(s, rng, 2);
    const BinaryMask coarse = random_blobs(s, rng, 2);
    const BinaryMask diff = xor_diff(prev, coarse);
    if (!diff.any()) continue;
    ++cases;
    const Pixel click{rng.uniform_int(0, s.width - 1), rng.uniform_int(0, s.height - 1)};
    const PixelBox want = expand(bbox_of(bf_anchored(diff, click)), 1.4, s);
    o.require(select_focus_crop(prev, coarse, click, cfg, s) == want, fmt("focus case %.0f differs", cases));
  }
  if (o.pass) o.detail = fmt("max round-trip %.3f px; expand exact; 100 focus cases", worst);
  return o;
}

Outcome slic_checks() {
  Outcome o;
  Rng rng(13);
  double worst_ratio = 1.0;
  for (int i = 0; i < 50; ++i) {
    const Size s{rng.uniform_int(64, 100), rng.uniform_int(64, 100)};
    const RgbImage img = i % 2 ? random_image(s, rng) : blob_image(s, rng);
    SlicParams p;
    p.n_segments = std::vector<int>{50, 100, 200, 300}[static_cast<std::size_t>(i % 4)];
    p.jitter = i % 3 ? 0.25 : 0.0;
    p.seed = static_cast<std::uint64_t>(i);
    const RegionLabeling l = slic(img, p);
    o.require(slic(img, p).labels == l.labels, fmt("image %.0f not deterministic", i));
    const auto areas = l.areas();
    o.require(areas[0] == 0, fmt("image %.0f has unlabeled pixels", i));
    for (int k = 1; k <= l.region_count; ++k) {
      int pieces = 0;
      bf_components(l.region(k), false, &pieces);
      if (pieces != 1) {
        o.require(false, fmt("image %.0f label %.0f has %.0f pieces", i, k, pieces));
        break;
      }
    }
    const double ratio = static_cast<double>(l.region_count) / p.n_segments;
    if (std::abs(ratio - 1.0) > std::abs(worst_ratio - 1.0)) worst_ratio = ratio;
    o.require(ratio >= 0.8 && ratio <= 1.2, fmt("image %.0f: %.0f segments for %.0f requested", i, l.region_count,
                                                p.n_segments));
  }
  if (o.pass) o.detail = fmt("50 images; worst count ratio %.3f", worst_ratio);
  return o;
}

Outcome classical_e2e() {
  Outcome o;
  GeodesicBackend backend;
  std::string per;
  int worst_clicks = 0;
  for (int i = 0; i < 10; ++i) {
    const auto f = two_tone_fixture(i);
    SessionState s = SessionState::start(f.image);
    int clicks = 0;
    double best = 0.0;
    while (clicks < 5 && best < 0.9) {
      run_round(s, backend, {eval_click(f.gt, s.prev_mask)});
      ++clicks;
      best = std::max(best, iou(s.prev_mask, f.gt));
    }
    o.require(best >= 0.9, f.id + fmt(": best IoU %.4f after 5 clicks", best));
    worst_clicks = std::max(worst_clicks, clicks);
  }
  if (o.pass) o.detail = fmt("10 fixtures at >= 0.90; worst needs %.0f clicks", worst_clicks);
  return o;
}

// --- service -------------------------------------------------------------------

class GateBackend : public SegmenterBackend {
 public:
  std::string name() const override { return "gate"; }
  ScoreMap coarse_segment(const CoarseRequest& req) override {
    std::unique_lock lock(m_);
    entered_ = true;
    cv_.notify_all();
    cv_.wait(lock, [this] { return open_; });
    return mask_to_logits(req.prev_mask);
  }
  void wait_entered() {
    std::unique_lock lock(m_);
    cv_.wait(lock, [this] { return entered_; });
  }
  void open() {
    std::lock_guard lock(m_);
    open_ = true;
    cv_.notify_all();
  }

 private:
  std::mutex m_;
  std::condition_variable cv_;
  bool entered_ = false;
  bool open_ = false;
};

std::string create_session(httplib::Client& c, const FixtureSample& f, const std::string& query = "") {
  const Bytes png = encode_png(f.image);
  httplib::MultipartFormDataItems items{{"image", std::string(png.begin(), png.end()), "image.png", "image/png"}};
  auto res = c.Post("/v1/sessions" + query, items);
  if (!res || res->status != 201) throw std::runtime_error("session create failed");
  return json::parse(res->body).at("id").get<std::string>();
}

httplib::Result post_click(httplib::Client& c, const std::string& id, int x, int y, const char* pol) {
  return c.Post("/v1/sessions/" + id + "/interactions",
                json{{"kind", "click"}, {"x", x}, {"y", y}, {"polarity", pol}}.dump(), "application/json");
}

std::vector<std::string> lifecycle_run() {
  ServiceConfig cfg;
  cfg.port = 0;
  Service service(cfg);
  service.start();
  httplib::Client c("127.0.0.1", service.port());
  const std::string id = create_session(c, two_tone_fixture(3));
  std::vector<std::string> masks;
  auto record = [&](const httplib::Result& res) {
    if (!res || res->status != 200) throw std::runtime_error("round failed");
    masks.push_back(json::parse(res->body).at("mask_rle").dump());
  };
  record(post_click(c, id, 32, 32, "positive"));
  record(post_click(c, id, 5, 5, "negative"));
  record(post_click(c, id, 28, 36, "positive"));
  record(c.Post("/v1/sessions/" + id + "/undo", "", "application/json"));
  record(post_click(c, id, 28, 36, "positive"));
  const auto png = c.Get("/v1/sessions/" + id + "/mask.png");
  masks.push_back(png && png->status == 200 ? png->body : "");
  service.stop();
  return masks;
}

Outcome service_checks() {
  Outcome o;
  const auto a = lifecycle_run();
  const auto b = lifecycle_run();
  o.require(a == b, "lifecycle masks differ between runs");
  o.require(a.size() == 6 && a[3] == a[1] && a[4] == a[2], "undo/re-click did not restore the expected masks");

  ServiceConfig cfg;
  cfg.port = 0;
  Service service(cfg);
  auto gate = std::make_shared<GateBackend>();
  service.register_backend("gate", gate);
  service.start();
  httplib::Client c("127.0.0.1", service.port());
  const std::string id = create_session(c, two_tone_fixture(0), "?backend=gate");
  auto first = std::async(std::launch::async, [&] {
    httplib::Client other("127.0.0.1", service.port());
    auto res = post_click(other, id, 30, 30, "positive");
    return res ? res->status : -1;
  });
  gate->wait_entered();
  auto concurrent = post_click(c, id, 10, 10, "negative");
  o.require(concurrent && concurrent->status == 409, "concurrent round was not rejected with 409");
  gate->open();
  o.require(first.get() == 200, "in-flight round did not complete");
  auto after = post_click(c, id, 10, 10, "negative");
  o.require(after && after->status == 200, "session unusable after the 409");
  service.stop();
  if (o.pass) o.detail = "create/3 clicks/undo/re-click byte-identical across 2 runs; 409 contract holds";
  return o;
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  criterion("defect-simulation-bounds", 60, alg1_bounds);
  criterion("perturbation-levels", 60, perturb_levels);
  criterion("refine-blend-identities", 0, eq1_identities);
  criterion("progressive-merge", 0, merge_preservation);
  criterion("deterministic-scribble", 0, deterministic_scribble);
  criterion("click-placement-oracle", 0, click_oracle);
  criterion("protocol-sanity", 30, protocol_sanity);
  criterion("crop-geometry", 0, crop_geometry);
  criterion("slic", 0, slic_checks);
  criterion("classical-backend-e2e", 30, classical_e2e);
  criterion("service-lifecycle", 0, service_checks);
  std::printf("%s: %d criteria failed\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
  return failures;
}
