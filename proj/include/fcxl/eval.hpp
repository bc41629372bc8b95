#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fcxl/backend.hpp"
#include "fcxl/crop.hpp"
#include "fcxl/dataset.hpp"

namespace fcxl {

inline constexpr const char* kReportSchema = "fcxl-report/1";

enum class EvalMode { click, scribble };
enum class StartMode { scratch, initial_mask };

std::string to_string(EvalMode m);
std::string to_string(StartMode m);

struct EvalConfig {
  EvalMode mode = EvalMode::click;
  std::vector<double> targets{0.85, 0.90, 0.95};
  int cap = 20;
  StartMode start = StartMode::scratch;
  CropConfig crop;
  int progressive_active_after = 10;
  std::optional<int> scribble_len_cap;
  std::vector<int> k_values{1, 5};  // k-mIoU aggregates to report
  unsigned threads = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

/// "85" for 0.85: the key used in per-sample and aggregate names.
std::string target_key(double t);

struct SampleRecord {
  std::string sample_id;
  double initial_iou = 0.0;
  std::vector<double> trajectory;     // IoU after each round
  std::map<std::string, int> reached; // target key -> rounds needed (cap when unreached)
  std::optional<int> failed_at_round; // set when the backend failed
  std::string error;

  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

struct EvalReport {
  std::string mode;
  std::string backend;
  std::string start;
  std::uint64_t seed = 0;
  int cap = 20;
  std::vector<double> targets;
  std::vector<SampleRecord> samples;         // sorted by sample_id
  std::map<std::string, double> aggregates;  // NoC85 / NoS85, NoF85, mIoU, mIoU@k ...
  nlohmann::json metadata = nlohmann::json::object();

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// Simulated interactive loop per sample: corrective click or scribble,
/// one round, record IoU; stops once the highest target is reached or at the
/// cap. Samples that never reach a target count as cap and as a failure.
EvalReport eval_interactive(SegmenterBackend& backend, const Dataset& ds, const EvalConfig& cfg);

/// Mean over samples of trajectory[min(k, length) - 1]; samples with no
/// rounds contribute their initial IoU.
double k_miou(const EvalReport& r, int k);

/// Recomputes the aggregate table from the per-sample records.
void compute_aggregates(EvalReport& r, EvalMode mode, const std::vector<int>& k_values);

struct SingleShotRecord {
  std::string sample_id;
  double input_iou = 0.0;   // box-as-mask or perturbed mask vs ground truth
  double output_iou = 0.0;
  std::string error;        // non-empty when the sample was skipped

  friend bool operator==(const SingleShotRecord&, const SingleShotRecord&) = default;
};

struct SingleShotReport {
  std::string mode;  // "boxes" or "coarse:<level>"
  std::string backend;
  std::uint64_t seed = 0;
  std::vector<SingleShotRecord> samples;
  double input_miou = 0.0;
  double output_miou = 0.0;
  int skipped = 0;
};

/// One jittered box and one round per sample.
SingleShotReport eval_boxes(SegmenterBackend& backend, const Dataset& ds, double jitter, std::uint64_t seed,
                            const CropConfig& crop = {}, unsigned threads = 1);

/// Per level: perturb the ground truth into the level's IoU range, then one
/// round with the perturbed mask as a coarse-mask interaction.
std::vector<SingleShotReport> eval_coarse(SegmenterBackend& backend, const Dataset& ds,
                                          const std::vector<int>& levels, std::uint64_t seed,
                                          const CropConfig& crop = {}, unsigned threads = 1);

nlohmann::json to_json(const EvalReport& r);
EvalReport eval_report_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SingleShotReport& r);

enum class ReportFormat { json, csv };

/// Atomic write. CSV has one header row of aggregate names and one row of
/// values.
void write_report(const EvalReport& r, const std::filesystem::path& path, ReportFormat format);
EvalReport read_report(const std::filesystem::path& path);
std::string report_csv(const EvalReport& r);

/// Seed for a sample: independent of evaluation order and thread count.
std::uint64_t sample_seed(std::uint64_t seed, const std::string& sample_id);

}  // namespace fcxl
