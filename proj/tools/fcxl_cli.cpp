// Command-line entry points: evaluation, interaction simulation, dataset
// construction and the session server.

#include <atomic>
#include <csignal>
#include <cstdio>
#include <iostream>
#include <map>
#include <set>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/base_sink.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "fcxl/dataset.hpp"
#include "fcxl/eval.hpp"
#include "fcxl/image_io.hpp"
#include "fcxl/mask_ops.hpp"
#include "fcxl/parallel.hpp"
#include "fcxl/remote.hpp"
#include "fcxl/rle.hpp"
#include "fcxl/service.hpp"
#include "fcxl/simulate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fcxl;

namespace {

enum ExitCode : int {
  kOk = 0,
  kUnexpected = 1,
  kConfig = 2,
  kDataset = 3,
  kBackend = 4,
  kPortBusy = 5,
  kAllFailed = 6,
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class JsonStderrSink : public spdlog::sinks::base_sink<std::mutex> {
 protected:
  void sink_it_(const spdlog::details::log_msg& msg) override {
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(msg.time.time_since_epoch()).count();
    const auto level = spdlog::level::to_string_view(msg.level);
    json j{{"ts_ms", ms},
           {"level", std::string(level.data(), level.size())},
           {"msg", std::string(msg.payload.data(), msg.payload.size())}};
    std::fputs((j.dump() + "\n").c_str(), stderr);
  }
  void flush_() override { std::fflush(stderr); }
};

void setup_logging(const std::string& level) {
  if (level == "json") {
    auto logger = std::make_shared<spdlog::logger>("fcxl", std::make_shared<JsonStderrSink>());
    logger->set_level(spdlog::level::info);
    spdlog::set_default_logger(logger);
    return;
  }
  auto logger = std::make_shared<spdlog::logger>("fcxl", std::make_shared<spdlog::sinks::stderr_sink_mt>());
  logger->set_level(spdlog::level::from_str(level));
  spdlog::set_default_logger(logger);
}

struct Globals {
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string log_level = "info";
};

std::vector<double> parse_targets(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      double v = std::stod(item);
      if (v > 1.0) v /= 100.0;
      out.push_back(v);
    } catch (const std::logic_error&) {
      throw ConfigError("bad target '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError("no targets given");
  return out;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoi(item));
    } catch (const std::logic_error&) {
      throw ConfigError("bad integer '" + item + "'");
    }
  }
  return out;
}

std::unique_ptr<SegmenterBackend> open_backend(const std::string& spec) {
  std::unique_ptr<SegmenterBackend> backend;
  try {
    backend = make_backend(spec);
  } catch (const BackendError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (auto* remote = dynamic_cast<RemoteBackend*>(backend.get())) remote->probe();
  return backend;
}

// --- eval --------------------------------------------------------------------

struct EvalArgs {
  std::string mode = "clicks";
  fs::path dataset;
  std::string backend = "classical";
  std::string targets = "85,90,95";
  int cap = 20;
  std::string start = "scratch";
  fs::path out = "report.json";
  std::string format = "json";
  double jitter = 0.1;
  std::string levels = "1,2,3,4,5";
  int scribble_len_cap = 0;
};

int run_eval(const EvalArgs& a, const Globals& g) {
  EvalConfig cfg;
  cfg.targets = parse_targets(a.targets);
  cfg.cap = a.cap;
  cfg.start = a.start == "initial" ? StartMode::initial_mask : StartMode::scratch;
  cfg.threads = g.threads;
  cfg.seed = g.seed;
  if (a.scribble_len_cap > 0) cfg.scribble_len_cap = a.scribble_len_cap;
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  const auto levels = parse_int_list(a.levels);
  for (int l : levels) {
    if (l < 1 || l > 5) throw ConfigError("levels must lie in 1..5");
  }
  auto backend = open_backend(a.backend);
  const Dataset ds = load_dataset(a.dataset);
  if (ds.samples.empty()) throw DatasetError("empty-dataset", "no usable samples under " + a.dataset.string());
  spdlog::info("evaluating {} samples with {} ({})", ds.samples.size(), backend->name(), a.mode);

  if (a.mode == "clicks" || a.mode == "scribbles") {
    cfg.mode = a.mode == "clicks" ? EvalMode::click : EvalMode::scribble;
    const EvalReport report = eval_interactive(*backend, ds, cfg);
    write_report(report, a.out, a.format == "csv" ? ReportFormat::csv : ReportFormat::json);
    for (const auto& [name, value] : report.aggregates) spdlog::info("{} = {:.4f}", name, value);
    const bool all_failed = std::all_of(report.samples.begin(), report.samples.end(),
                                        [](const SampleRecord& s) { return s.failed_at_round.has_value(); });
    return all_failed ? kBackend : kOk;
  }
  json out{{"schema", kReportSchema}, {"mode", a.mode}, {"backend", backend->name()}, {"seed", g.seed}};
  if (a.mode == "boxes") {
    const auto r = eval_boxes(*backend, ds, a.jitter, g.seed, cfg.crop, g.threads);
    out["jitter"] = a.jitter;
    out["result"] = to_json(r);
    spdlog::info("box mIoU = {:.4f}", r.output_miou);
  } else {
    json per_level = json::array();
    for (const auto& r : eval_coarse(*backend, ds, levels, g.seed, cfg.crop, g.threads)) {
      spdlog::info("{}: coarse mIoU {:.4f} -> refined {:.4f}", r.mode, r.input_miou, r.output_miou);
      per_level.push_back(to_json(r));
    }
    out["levels"] = per_level;
  }
  write_file_atomic(a.out, out.dump(2) + "\n");
  return kOk;
}

// --- dataset transforms ----------------------------------------------------------

struct MirrorResult {
  json entry;
  bool ok = false;
};

fs::path initial_mask_path(const std::string& id) { return fs::path("initial_masks") / (id + ".png"); }

// Copies images and ground truths to the same relative paths under out and
// writes one generated initial mask per sample.
int mirror_with_initial_masks(const fs::path& src, const fs::path& dst, const Globals& g, const std::string& what,
                              const std::function<MirrorResult(const Sample&, std::uint64_t, BinaryMask&)>& make) {
  const auto records = read_index(src);
  const Dataset ds = load_dataset(src);
  std::map<std::string, const DatasetRecord*> by_id;
  for (const auto& r : records) by_id[r.id] = &r;

  std::vector<MirrorResult> results(ds.samples.size());
  parallel_for(ds.samples.size(), g.threads, [&](std::size_t i) {
    const Sample& s = ds.samples[i];
    const std::uint64_t seed = sample_seed(g.seed, s.id);
    BinaryMask generated;
    results[i] = make(s, seed, generated);
    results[i].entry["id"] = s.id;
    results[i].entry["seed"] = seed;
    if (results[i].ok) {
      const DatasetRecord& rec = *by_id.at(s.id);
      for (const auto& rel : {rec.image, rec.mask}) {
        fs::create_directories((dst / rel).parent_path());
        write_file_atomic(dst / rel, read_file(src / rel));
      }
      const fs::path rel = initial_mask_path(s.id);
      fs::create_directories((dst / rel).parent_path());
      save_mask(dst / rel, generated);
    }
  });

  std::vector<DatasetRecord> out_records;
  json entries = json::array();
  int failures = 0;
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    entries.push_back(results[i].entry);
    if (!results[i].ok) {
      ++failures;
      continue;
    }
    DatasetRecord rec = *by_id.at(ds.samples[i].id);
    rec.initial_mask = initial_mask_path(rec.id);
    out_records.push_back(std::move(rec));
  }
  fs::create_directories(dst);
  write_index(dst, out_records);
  json manifest{{"kind", what}, {"seed", g.seed}, {"samples", entries}, {"skipped_empty", ds.skipped},
                {"failed", failures}};
  write_file_atomic(dst / "manifest.json", manifest.dump(2) + "\n");
  spdlog::info("{}: {} written, {} unreachable", what, out_records.size(), failures);
  return (!ds.samples.empty() && failures == static_cast<int>(ds.samples.size())) ? kAllFailed : kOk;
}

int run_simulate_defects(const fs::path& src, const fs::path& dst, double min_iou, double max_iou,
                         const Globals& g) {
  DefectSpec base;
  base.min_iou = min_iou;
  base.max_iou = max_iou;
  try {
    base.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return mirror_with_initial_masks(src, dst, g, "defective-masks",
                                   [&](const Sample& s, std::uint64_t seed, BinaryMask& out) {
                                     MirrorResult r;
                                     DefectSpec spec = base;
                                     spec.seed = seed;
                                     try {
                                       DefectResult d = simulate_defective_mask(s.image, s.gt, spec);
                                       json trace = json::array();
                                       for (auto t : d.trace) trace.push_back(to_string(t));
                                       r.entry = {{"iou", d.iou}, {"restarts", d.restarts}, {"trace", trace}};
                                       out = std::move(d.mask);
                                       r.ok = true;
                                     } catch (const Error& e) {
                                       r.entry = {{"error", e.code()}};
                                     }
                                     return r;
                                   });
}

int run_perturb(const fs::path& src, const fs::path& dst, int level, const Globals& g) {
  if (level < 1 || level > 5) throw ConfigError("--level must lie in 1..5");
  return mirror_with_initial_masks(src, dst, g, "perturbed-masks:" + std::to_string(level),
                                   [&](const Sample& s, std::uint64_t seed, BinaryMask& out) {
                                     MirrorResult r;
                                     try {
                                       out = perturb_mask(s.gt, PerturbLevel::from_int(level), seed);
                                       r.entry = {{"iou", iou(out, s.gt)}, {"level", level}};
                                       r.ok = true;
                                     } catch (const Error& e) {
                                       r.entry = {{"error", e.code()}, {"level", level}};
                                     }
                                     return r;
                                   });
}

int run_gen_scribbles(const fs::path& src, const fs::path& out, const std::string& style, const Globals& g) {
  std::optional<ScribbleStyle> training;
  if (style != "eval") {
    try {
      training = scribble_style_from_string(style);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  }
  const Dataset ds = load_dataset(src);
  std::vector<std::string> lines(ds.samples.size());
  parallel_for(ds.samples.size(), g.threads, [&](std::size_t i) {
    const Sample& s = ds.samples[i];
    const std::uint64_t seed = sample_seed(g.seed, s.id);
    json rec{{"sample_id", s.id}, {"kind", "scribble"}, {"seed", seed}, {"style", style}};
    if (training) {
      const BinaryMask raster = gen_training_scribble(s.gt, *training, seed);
      rec["payload"] = {{"polarity", "positive"}, {"mask_rle", rle_to_json(rle_encode(raster))}};
    } else {
      const BinaryMask start = s.initial_mask ? *s.initial_mask : BinaryMask(s.gt.size());
      const ScribbleSim sim = eval_scribble(s.gt, start);
      rec["payload"] = to_json(Interaction{sim.scribble});
      rec["fell_back_to_click"] = sim.fell_back_to_click;
    }
    lines[i] = rec.dump();
  });
  std::string text;
  for (const auto& l : lines) text += l + "\n";
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_file_atomic(out, text);
  spdlog::info("wrote {} scribbles to {}", lines.size(), out.string());
  return kOk;
}

int run_build_subset(const fs::path& src, const fs::path& dst, int per_video, int min_pixels) {
  if (per_video < 1 || min_pixels < 0) throw ConfigError("--per-video must be >= 1 and --min-pixels >= 0");
  const auto records = read_index(src);
  std::map<std::string, std::vector<const DatasetRecord*>> videos;
  for (const auto& r : records) {
    const auto slash = r.id.find('/');
    videos[slash == std::string::npos ? r.id : r.id.substr(0, slash)].push_back(&r);
  }
  std::vector<DatasetRecord> kept;
  json dropped = json::array();
  for (auto& [video, frames] : videos) {
    std::sort(frames.begin(), frames.end(), [](auto* a, auto* b) { return a->id < b->id; });
    // Evenly spaced frames across the video.
    const std::size_t n = frames.size();
    const std::size_t take = std::min<std::size_t>(n, static_cast<std::size_t>(per_video));
    std::set<std::size_t> picks;
    for (std::size_t k = 0; k < take; ++k) picks.insert(take == 1 ? 0 : k * (n - 1) / (take - 1));
    for (std::size_t idx : picks) {
      const DatasetRecord& r = *frames[idx];
      BinaryMask m;
      try {
        m = load_mask(src / r.mask);
      } catch (const Error& e) {
        throw DatasetError(e.code(), "sample '" + r.id + "': " + e.what());
      }
      const auto area = m.count();
      if (area < static_cast<std::size_t>(min_pixels)) {
        dropped.push_back({{"id", r.id}, {"pixels", area}});
        continue;
      }
      std::vector<fs::path> files{r.image, r.mask};
      if (r.initial_mask) files.push_back(*r.initial_mask);
      for (const auto& rel : files) {
        fs::create_directories((dst / rel).parent_path());
        write_file_atomic(dst / rel, read_file(src / rel));
      }
      kept.push_back(r);
    }
  }
  fs::create_directories(dst);
  write_index(dst, kept);
  write_file_atomic(dst / "manifest.json",
                    json{{"kind", "subset"}, {"per_video", per_video}, {"min_pixels", min_pixels},
                         {"videos", videos.size()}, {"kept", kept.size()}, {"dropped", dropped}}
                            .dump(2) + "\n");
  spdlog::info("subset: kept {} frames from {} videos", kept.size(), videos.size());
  return kept.empty() && !records.empty() ? kAllFailed : kOk;
}

// --- serve ------------------------------------------------------------------

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop = true; }

int run_serve(const std::string& bind, const std::string& backend, const std::string& ui_dir, int ttl_s,
              double max_mpix, const std::string& cors, const Globals& g) {
  ServiceConfig cfg;
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) throw ConfigError("--bind must be HOST:PORT");
  cfg.host = bind.substr(0, colon);
  try {
    cfg.port = std::stoi(bind.substr(colon + 1));
  } catch (const std::logic_error&) {
    throw ConfigError("bad port in --bind");
  }
  cfg.backend = backend;
  cfg.session_ttl = std::chrono::seconds(ttl_s);
  cfg.max_image_pixels = static_cast<std::size_t>(max_mpix * 1e6);
  cfg.cors_origin = cors;
  cfg.worker_threads = std::max(2u, g.threads);
  if (!ui_dir.empty()) {
    if (!fs::is_directory(ui_dir)) throw ConfigError("--ui-dir is not a directory");
    cfg.ui_dir = ui_dir;
  }
  // Fail before binding when the backend is unusable.
  std::shared_ptr<SegmenterBackend> instance = open_backend(backend);

  Service service(cfg);
  service.register_backend(backend, instance);
  service.bind();
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::thread watcher([&service] {
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(50));
    spdlog::info("shutting down; waiting for in-flight rounds");
    service.stop();
  });
  std::printf("listening on %s:%d\n", cfg.host.c_str(), service.port());
  std::fflush(stdout);
  service.run();
  g_stop = true;
  watcher.join();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interactive segmentation toolkit: evaluation, simulation, serving"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Seed for every random choice")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads for dataset-parallel work")
      ->check(CLI::Range(1u, 1024u))
      ->capture_default_str();
  app.add_option("--log-level", g.log_level, "trace|debug|info|warn|error|off, or json for structured logs")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off", "json"}))
      ->capture_default_str();

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Evaluate a backend on a dataset");
  eval->add_option("--mode", ev.mode, "clicks|scribbles|boxes|coarse")
      ->check(CLI::IsMember({"clicks", "scribbles", "boxes", "coarse"}))
      ->capture_default_str();
  eval->add_option("--dataset", ev.dataset, "Dataset root holding index.json")->required();
  eval->add_option("--backend", ev.backend,
                   "oracle:perfect|oracle:delay:K|oracle:never|oracle:identity|oracle:echo|classical|remote:URL")
      ->capture_default_str();
  eval->add_option("--targets", ev.targets, "Target IoUs, e.g. 85,90")->capture_default_str();
  eval->add_option("--cap", ev.cap, "Interaction cap per sample")->check(CLI::PositiveNumber)->capture_default_str();
  eval->add_option("--start", ev.start, "scratch|initial")
      ->check(CLI::IsMember({"scratch", "initial"}))
      ->capture_default_str();
  eval->add_option("--out", ev.out, "Report path")->capture_default_str();
  eval->add_option("--format", ev.format, "json|csv (click and scribble modes)")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  eval->add_option("--jitter", ev.jitter, "Box jitter fraction (boxes mode)")
      ->check(CLI::Range(0.0, 0.49))
      ->capture_default_str();
  eval->add_option("--levels", ev.levels, "Perturbation levels (coarse mode)")->capture_default_str();
  eval->add_option("--scribble-len-cap", ev.scribble_len_cap, "Max scribble path vertices, 0 = unlimited")
      ->capture_default_str();

  fs::path sd_dataset, sd_out;
  double sd_min = 0.75, sd_max = 0.85;
  auto* sim = app.add_subcommand("simulate-defects", "Write a copy of a dataset with defective initial masks");
  sim->add_option("--dataset", sd_dataset, "Source dataset root")->required();
  sim->add_option("--out", sd_out, "Output dataset root")->required();
  sim->add_option("--min-iou", sd_min, "Lower IoU bound")->capture_default_str();
  sim->add_option("--max-iou", sd_max, "Upper IoU bound")->capture_default_str();

  fs::path pt_dataset, pt_out;
  int pt_level = 1;
  auto* perturb = app.add_subcommand("perturb", "Write a copy of a dataset with perturbed coarse masks");
  perturb->add_option("--dataset", pt_dataset, "Source dataset root")->required();
  perturb->add_option("--out", pt_out, "Output dataset root")->required();
  perturb->add_option("--level", pt_level, "Perturbation level 1..5")->required();

  fs::path gs_dataset, gs_out;
  std::string gs_style = "eval";
  auto* gen = app.add_subcommand("gen-scribbles", "Generate scribbles as JSON lines");
  gen->add_option("--dataset", gs_dataset, "Dataset root")->required();
  gen->add_option("--out", gs_out, "Output .jsonl path")->required();
  gen->add_option("--style", gs_style, "bezier|axial|boundary|composed|eval")
      ->check(CLI::IsMember({"bezier", "axial", "boundary", "composed", "eval"}))
      ->capture_default_str();

  fs::path bs_dataset, bs_out;
  int bs_per_video = 10, bs_min_pixels = 300;
  auto* subset = app.add_subcommand("build-subset", "Sample frames per video and drop small masks");
  subset->add_option("--dataset", bs_dataset, "Source dataset root (ids are video/frame)")->required();
  subset->add_option("--out", bs_out, "Output dataset root")->required();
  subset->add_option("--per-video", bs_per_video, "Frames kept per video")->capture_default_str();
  subset->add_option("--min-pixels", bs_min_pixels, "Minimum mask area")->capture_default_str();

  std::string sv_bind = "127.0.0.1:8080", sv_backend = "classical", sv_ui, sv_cors = "*";
  int sv_ttl = 1800;
  double sv_mpix = 32.0;
  auto* serve = app.add_subcommand("serve", "Run the HTTP session service");
  serve->add_option("--bind", sv_bind, "HOST:PORT")->envname("FCXL_BIND")->capture_default_str();
  serve->add_option("--backend", sv_backend, "Backend used by sessions")->envname("FCXL_BACKEND")->capture_default_str();
  serve->add_option("--ui-dir", sv_ui, "Static UI bundle to serve at /")->envname("FCXL_UI_DIR");
  serve->add_option("--session-ttl", sv_ttl, "Idle seconds before a session is dropped")
      ->envname("FCXL_SESSION_TTL")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  serve->add_option("--max-image-mpix", sv_mpix, "Largest accepted image in megapixels")
      ->envname("FCXL_MAX_IMAGE_MPIX")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  serve->add_option("--cors-origin", sv_cors, "Allowed CORS origin")->envname("FCXL_CORS_ORIGIN")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }
  setup_logging(g.log_level);
  spdlog::debug("seed {}", g.seed);

  try {
    if (*eval) return run_eval(ev, g);
    if (*sim) return run_simulate_defects(sd_dataset, sd_out, sd_min, sd_max, g);
    if (*perturb) return run_perturb(pt_dataset, pt_out, pt_level, g);
    if (*gen) return run_gen_scribbles(gs_dataset, gs_out, gs_style, g);
    if (*subset) return run_build_subset(bs_dataset, bs_out, bs_per_video, bs_min_pixels);
    if (*serve) return run_serve(sv_bind, sv_backend, sv_ui, sv_ttl, sv_mpix, sv_cors, g);
  } catch (const ConfigError& e) {
    spdlog::error("configuration error: {}", e.what());
    return kConfig;
  } catch (const DatasetError& e) {
    spdlog::error("dataset error: {}", e.what());
    return kDataset;
  } catch (const BackendError& e) {
    spdlog::error("backend error: {}", e.what());
    return kBackend;
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    if (e.code() == "port-busy") return kPortBusy;
    return e.category() == ErrorCategory::dataset ? kDataset : kUnexpected;
  } catch (const std::exception& e) {
    spdlog::error("unexpected failure: {}", e.what());
    return kUnexpected;
  }
  return kOk;
}
