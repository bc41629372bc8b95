#include "fcxl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <spdlog/spdlog.h>

#include "fcxl/image_io.hpp"
#include "fcxl/mask_ops.hpp"
#include "fcxl/parallel.hpp"
#include "fcxl/pipeline.hpp"
#include "fcxl/random.hpp"
#include "fcxl/simulate.hpp"

namespace fcxl {

std::string to_string(EvalMode m) { return m == EvalMode::click ? "clicks" : "scribbles"; }
std::string to_string(StartMode m) { return m == StartMode::scratch ? "scratch" : "initial"; }

void EvalConfig::validate() const {
  if (targets.empty()) throw Error("bad-targets", "at least one target IoU is required");
  for (double t : targets) {
    if (!(t > 0.0 && t <= 1.0)) throw Error("bad-targets", "target IoUs must lie in (0, 1]");
  }
  if (cap < 1) throw Error("bad-cap", "the interaction cap must be at least 1");
  for (int k : k_values) {
    if (k < 1) throw Error("bad-k", "k must be at least 1");
  }
  crop.validate();
}

std::string target_key(double t) { return std::to_string(static_cast<int>(std::lround(t * 100.0))); }

std::uint64_t sample_seed(std::uint64_t seed, const std::string& sample_id) {
  return mix64(seed ^ mix64(fnv1a(sample_id)));
}

namespace {

SessionState make_session(const Sample& s, const CropConfig& crop, bool from_initial) {
  SessionState st = SessionState::start(s.image, from_initial ? s.initial_mask : std::nullopt, crop);
  st.ground_truth = s.gt;
  st.session_id = s.id;
  return st;
}

SampleRecord eval_sample(SegmenterBackend& backend, const Sample& sample, const EvalConfig& cfg) {
  SampleRecord rec;
  rec.sample_id = sample.id;
  const bool from_initial = cfg.start == StartMode::initial_mask;
  if (from_initial && !sample.initial_mask) {
    throw DatasetError("missing-initial-mask", "sample '" + sample.id + "' has no initial mask");
  }
  SessionState s = make_session(sample, cfg.crop, from_initial);
  s.progressive_active_after = cfg.progressive_active_after;
  rec.initial_iou = iou(s.prev_mask, sample.gt);
  const double highest = *std::max_element(cfg.targets.begin(), cfg.targets.end());
  for (double t : cfg.targets) {
    if (rec.initial_iou >= t) rec.reached[target_key(t)] = 0;
  }
  try {
    prepare_context(s, backend);
    double current = rec.initial_iou;
    for (int round = 1; round <= cfg.cap && current < highest; ++round) {
      rec.failed_at_round = round;
      Interaction next = cfg.mode == EvalMode::click
                             ? Interaction{eval_click(sample.gt, s.prev_mask)}
                             : Interaction{eval_scribble(sample.gt, s.prev_mask, cfg.scribble_len_cap).scribble};
      const RoundResult r = run_round(s, backend, next);
      current = iou(r.mask, sample.gt);
      rec.trajectory.push_back(current);
      for (double t : cfg.targets) {
        if (current >= t && !rec.reached.count(target_key(t))) rec.reached[target_key(t)] = round;
      }
      rec.failed_at_round.reset();
    }
  } catch (const Error& e) {
    spdlog::warn("sample '{}' failed at round {}: {}", sample.id, rec.failed_at_round.value_or(0), e.what());
    if (!rec.failed_at_round) rec.failed_at_round = 0;
    rec.error = e.what();
  }
  for (double t : cfg.targets) rec.reached.try_emplace(target_key(t), cfg.cap);
  return rec;
}

double final_iou(const SampleRecord& r) { return r.trajectory.empty() ? r.initial_iou : r.trajectory.back(); }

double best_iou(const SampleRecord& r) {
  double best = r.initial_iou;
  for (double v : r.trajectory) best = std::max(best, v);
  return best;
}

}  // namespace

double k_miou(const EvalReport& r, int k) {
  if (k < 1) throw Error("bad-k", "k must be at least 1");
  if (r.samples.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : r.samples) {
    if (s.trajectory.empty()) {
      sum += s.initial_iou;
    } else {
      sum += s.trajectory[static_cast<std::size_t>(std::min<std::size_t>(k, s.trajectory.size()) - 1)];
    }
  }
  return sum / static_cast<double>(r.samples.size());
}

void compute_aggregates(EvalReport& r, EvalMode mode, const std::vector<int>& k_values) {
  r.aggregates.clear();
  const std::string count_name = mode == EvalMode::click ? "NoC" : "NoS";
  const double n = static_cast<double>(r.samples.size());
  for (double t : r.targets) {
    const std::string key = target_key(t);
    double total = 0.0;
    int failures = 0;
    for (const auto& s : r.samples) {
      total += s.reached.at(key);
      if (best_iou(s) < t) ++failures;
    }
    r.aggregates[count_name + key] = r.samples.empty() ? 0.0 : total / n;
    r.aggregates["NoF" + key] = failures;
  }
  double miou = 0.0;
  for (const auto& s : r.samples) miou += final_iou(s);
  r.aggregates["mIoU"] = r.samples.empty() ? 0.0 : miou / n;
  for (int k : k_values) r.aggregates["mIoU@" + std::to_string(k)] = k_miou(r, k);
}

EvalReport eval_interactive(SegmenterBackend& backend, const Dataset& ds, const EvalConfig& cfg) {
  cfg.validate();
  EvalReport report;
  report.mode = to_string(cfg.mode);
  report.backend = backend.name();
  report.start = to_string(cfg.start);
  report.seed = cfg.seed;
  report.cap = cfg.cap;
  report.targets = cfg.targets;
  std::sort(report.targets.begin(), report.targets.end());
  report.samples.resize(ds.samples.size());
  parallel_for(ds.samples.size(), cfg.threads,
               [&](std::size_t i) { report.samples[i] = eval_sample(backend, ds.samples[i], cfg); });
  std::sort(report.samples.begin(), report.samples.end(),
            [](const SampleRecord& a, const SampleRecord& b) { return a.sample_id < b.sample_id; });
  compute_aggregates(report, cfg.mode, cfg.k_values);
  int backend_failures = 0;
  for (const auto& s : report.samples) backend_failures += s.failed_at_round.has_value();
  report.metadata = {{"failures_count_as_cap", true},
                     {"early_stop", "highest target reached"},
                     {"k_miou_carry", "last IoU carried forward"},
                     {"skipped_samples", ds.skipped},
                     {"failed_samples", backend_failures}};
  return report;
}

namespace {

SingleShotReport finish(SingleShotReport r) {
  std::sort(r.samples.begin(), r.samples.end(),
            [](const SingleShotRecord& a, const SingleShotRecord& b) { return a.sample_id < b.sample_id; });
  double in = 0.0;
  double out = 0.0;
  int used = 0;
  for (const auto& s : r.samples) {
    if (!s.error.empty()) {
      ++r.skipped;
      continue;
    }
    in += s.input_iou;
    out += s.output_iou;
    ++used;
  }
  r.input_miou = used ? in / used : 0.0;
  r.output_miou = used ? out / used : 0.0;
  return r;
}

double one_round(SegmenterBackend& backend, const Sample& sample, const CropConfig& crop, const Interaction& i) {
  SessionState s = make_session(sample, crop, false);
  prepare_context(s, backend);
  return iou(run_round(s, backend, i).mask, sample.gt);
}

}  // namespace

SingleShotReport eval_boxes(SegmenterBackend& backend, const Dataset& ds, double jitter, std::uint64_t seed,
                            const CropConfig& crop, unsigned threads) {
  SingleShotReport r;
  r.mode = "boxes";
  r.backend = backend.name();
  r.seed = seed;
  r.samples.resize(ds.samples.size());
  parallel_for(ds.samples.size(), threads, [&](std::size_t i) {
    const Sample& sample = ds.samples[i];
    SingleShotRecord& rec = r.samples[i];
    rec.sample_id = sample.id;
    try {
      const PixelBox box = simulate_box(sample.gt, jitter, sample_seed(seed, sample.id));
      rec.input_iou = iou(box_mask(box, sample.gt.size()), sample.gt);
      rec.output_iou = one_round(backend, sample, crop, {BoxPrompt{box}});
    } catch (const Error& e) {
      spdlog::warn("sample '{}' skipped: {}", sample.id, e.what());
      rec.error = e.what();
    }
  });
  return finish(std::move(r));
}

std::vector<SingleShotReport> eval_coarse(SegmenterBackend& backend, const Dataset& ds,
                                          const std::vector<int>& levels, std::uint64_t seed,
                                          const CropConfig& crop, unsigned threads) {
  std::vector<SingleShotReport> out;
  for (int level : levels) {
    const PerturbLevel pl = PerturbLevel::from_int(level);
    SingleShotReport r;
    r.mode = "coarse:" + std::to_string(level);
    r.backend = backend.name();
    r.seed = seed;
    r.samples.resize(ds.samples.size());
    parallel_for(ds.samples.size(), threads, [&](std::size_t i) {
      const Sample& sample = ds.samples[i];
      SingleShotRecord& rec = r.samples[i];
      rec.sample_id = sample.id;
      try {
        const BinaryMask coarse =
            perturb_mask(sample.gt, pl, Rng(sample_seed(seed, sample.id)).split(level).next_u64());
        rec.input_iou = iou(coarse, sample.gt);
        rec.output_iou = one_round(backend, sample, crop, {CoarseMaskPrompt{coarse}});
      } catch (const Error& e) {
        spdlog::warn("sample '{}' skipped at level {}: {}", sample.id, level, e.what());
        rec.error = e.what();
      }
    });
    out.push_back(finish(std::move(r)));
  }
  return out;
}

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : r.samples) {
    nlohmann::json j{{"sample_id", s.sample_id},
                     {"initial_iou", s.initial_iou},
                     {"trajectory", s.trajectory},
                     {"reached", s.reached}};
    j["failed_at_round"] = s.failed_at_round ? nlohmann::json(*s.failed_at_round) : nlohmann::json();
    if (!s.error.empty()) j["error"] = s.error;
    samples.push_back(std::move(j));
  }
  return {{"schema", kReportSchema}, {"mode", r.mode},       {"backend", r.backend},
          {"start", r.start},        {"seed", r.seed},       {"cap", r.cap},
          {"targets", r.targets},    {"samples", samples},   {"aggregates", r.aggregates},
          {"metadata", r.metadata}};
}

EvalReport eval_report_from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema").get<std::string>() != kReportSchema) {
      throw Error("bad-report", "unsupported report schema");
    }
    EvalReport r;
    r.mode = j.at("mode").get<std::string>();
    r.backend = j.at("backend").get<std::string>();
    r.start = j.at("start").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.cap = j.at("cap").get<int>();
    r.targets = j.at("targets").get<std::vector<double>>();
    r.aggregates = j.at("aggregates").get<std::map<std::string, double>>();
    r.metadata = j.at("metadata");
    for (const auto& s : j.at("samples")) {
      SampleRecord rec;
      rec.sample_id = s.at("sample_id").get<std::string>();
      rec.initial_iou = s.at("initial_iou").get<double>();
      rec.trajectory = s.at("trajectory").get<std::vector<double>>();
      rec.reached = s.at("reached").get<std::map<std::string, int>>();
      if (!s.at("failed_at_round").is_null()) rec.failed_at_round = s["failed_at_round"].get<int>();
      rec.error = s.value("error", std::string());
      r.samples.push_back(std::move(rec));
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error("bad-report", e.what());
  }
}

nlohmann::json to_json(const SingleShotReport& r) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : r.samples) {
    nlohmann::json j{{"sample_id", s.sample_id}, {"input_iou", s.input_iou}, {"output_iou", s.output_iou}};
    if (!s.error.empty()) j["error"] = s.error;
    samples.push_back(std::move(j));
  }
  return {{"mode", r.mode},
          {"backend", r.backend},
          {"seed", r.seed},
          {"samples", samples},
          {"input_mIoU", r.input_miou},
          {"output_mIoU", r.output_miou},
          {"skipped", r.skipped}};
}

std::string report_csv(const EvalReport& r) {
  std::ostringstream header;
  std::ostringstream values;
  bool first = true;
  for (const auto& [name, value] : r.aggregates) {
    header << (first ? "" : ",") << name;
    values << (first ? "" : ",") << nlohmann::json(value).dump();
    first = false;
  }
  return header.str() + "\n" + values.str() + "\n";
}

void write_report(const EvalReport& r, const std::filesystem::path& path, ReportFormat format) {
  write_file_atomic(path, format == ReportFormat::json ? to_json(r).dump(2) + "\n" : report_csv(r));
}

EvalReport read_report(const std::filesystem::path& path) {
  const Bytes raw = read_file(path);
  try {
    return eval_report_from_json(nlohmann::json::parse(raw.begin(), raw.end()));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("bad-report", e.what());
  }
}

}  // namespace fcxl
