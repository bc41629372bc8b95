#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fcxl/crop.hpp"
#include "fcxl/image.hpp"
#include "fcxl/interaction.hpp"
#include "fcxl/mask.hpp"

namespace fcxl {

/// Corrective click at the deepest pixel of the largest error component.
/// Its polarity is the ground truth at that pixel. Throws "already-perfect"
/// when pred == gt.
Click eval_click(const BinaryMask& gt, const BinaryMask& pred);

struct ScribbleSim {
  Scribble scribble;    // path, polarity and the rendered raster
  BinaryMask region;    // the error component it corrects
  bool fell_back_to_click = false;
};

/// Deterministic corrective scribble: largest error component, thinned,
/// turned into a radius graph, cycles broken, longest path rendered as a
/// Bezier stroke of thickness 3 restricted to the component. Regions whose
/// skeleton has a single pixel get a click disk instead. max_len_cap keeps
/// the central max_len_cap path vertices.
ScribbleSim eval_scribble(const BinaryMask& gt, const BinaryMask& pred,
                          std::optional<int> max_len_cap = std::nullopt);

enum class ScribbleStyle { bezier, axial, boundary, composed };

ScribbleStyle scribble_style_from_string(const std::string& s);
std::string to_string(ScribbleStyle s);

/// Training-style scribble of random thickness in 3..7. Bezier and axial
/// strokes stay inside the mask; boundary strokes hug its contour.
BinaryMask gen_training_scribble(const BinaryMask& mask, ScribbleStyle style, std::uint64_t seed);

struct TrainingClickParams {
  int n_pos_max = 24;
  int n_neg_max = 24;
  double decay = 0.8;
  int negative_band = 10;
};

/// Positive count n in 1..n_pos_max with P(n) ~ decay^(n-1); negative count
/// n in 0..n_neg_max with P(n) ~ decay^n. Positives are uniform on gt,
/// negatives uniform on the background band of the given width around gt.
std::vector<Click> gen_training_clicks(const BinaryMask& gt, const TrainingClickParams& params,
                                       std::uint64_t seed);

/// Mean of the truncated geometric law used above.
double truncated_geometric_mean(int lo, int hi, double decay);

/// Tight box of gt with every side moved independently by up to
/// jitter_frac of the box extent (truncated toward zero), then clamped.
PixelBox simulate_box(const BinaryMask& gt, double jitter_frac, std::uint64_t seed);

struct PerturbLevel {
  int level = 1;

  double lo() const;
  double hi() const;
  static PerturbLevel from_int(int level);
};

/// Random local erosions/dilations until iou(gt, result) lies in the level's
/// range. Throws "perturb-unreachable" after 500 attempts.
BinaryMask perturb_mask(const BinaryMask& gt, PerturbLevel level, std::uint64_t seed);

enum class DefectType { boundary = 0, external = 1, internal = 2 };

std::string to_string(DefectType t);

struct DefectSpec {
  std::array<double, 3> error_type_probs{0.65, 0.25, 0.1};
  double min_iou = 0.75;
  double max_iou = 0.85;
  std::vector<int> pixel_number_choices{50, 100, 200, 300, 500, 700};
  std::uint64_t seed = 0;
  int boundary_band = 5;
  int max_restarts = 200;
  int max_steps = 50;  // merges per restart before giving up on it

  void validate() const;
};

struct DefectResult {
  BinaryMask mask;
  double iou = 0.0;
  std::vector<DefectType> trace;  // every error type drawn, across restarts
  int restarts = 0;
};

/// Superpixel-based defect injection: repeatedly draws an error type and a
/// superpixel count, runs SLIC and merges superpixels into (or out of) the
/// running mask until its IoU with gt lands in [min_iou, max_iou]. Falling
/// below min_iou restarts from gt. Throws "defect-unreachable".
DefectResult simulate_defective_mask(const RgbImage& image, const BinaryMask& gt,
                                     const DefectSpec& spec);

}  // namespace fcxl
