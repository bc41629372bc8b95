#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fcxl/backend.hpp"
#include "fcxl/crop.hpp"
#include "fcxl/interaction.hpp"

namespace fcxl {

struct RefineBundle {
  ScoreMap coarse_logits;    // M_l
  ScoreMap detail_logits;    // M_d
  ScoreMap boundary_logits;  // M_b
};

/// sigmoid(M_b) * M_d + (1 - sigmoid(M_b)) * M_l, pixel-wise.
ScoreMap refine_blend(const RefineBundle& b);

/// fg = (p >= t_hi) | positive; bg = ((p <= t_lo) | negative) & ~fg; the
/// rest is unknown. p is the sigmoid of the logits.
TriMap build_trimap(const ScoreMap& primitive_logits, const BiMap& bimap, double t_lo = 0.3,
                    double t_hi = 0.7);

/// When active, only the difference component anchored at `anchor` takes
/// the new prediction; everything else keeps prev bit-for-bit.
BinaryMask progressive_merge(const BinaryMask& prev, const BinaryMask& new_pred, Pixel anchor,
                             bool active);

struct RoundRecord {
  Interaction interaction;
  BinaryMask mask_before;
  BiMap bimap_before;
};

struct SessionState {
  RgbImage image;
  BinaryMask prev_mask;
  BiMap bimap;  // accumulated clicks and scribbles
  std::vector<RoundRecord> history;
  int round = 0;
  int progressive_active_after = 10;
  bool started_from_mask = false;
  CropConfig cfg;
  double trimap_lo = 0.3;
  double trimap_hi = 0.7;
  std::optional<BinaryMask> ground_truth;
  std::string session_id;
  std::optional<std::string> context_token;

  /// Fresh session; a nonempty initial mask turns on progressive merging
  /// from the first round.
  static SessionState start(RgbImage image, std::optional<BinaryMask> initial_mask = std::nullopt,
                            CropConfig cfg = {});
};

struct RoundTimings {
  double coarse_ms = 0.0;
  double refine_ms = 0.0;
  double total_ms = 0.0;
  Size coarse_size;
  std::optional<Size> refine_size;
  int refine_patches = 0;
};

struct RoundResult {
  BinaryMask mask;
  PixelBox target_box;
  PixelBox focus_box;
  Pixel anchor;
  RoundTimings timings;
};

/// One interaction round: target crop, coarse segmentation, focus crop,
/// optional detail refinement blended into the coarse logits, progressive
/// merge. The session is only modified once every step has succeeded.
RoundResult run_round(SessionState& s, SegmenterBackend& backend, const Interaction& i);

/// Runs the backend's once-per-image context stage on the image resized to
/// the context size and stores the token. No-op for backends without one.
void prepare_context(SessionState& s, SegmenterBackend& backend);

/// Restores the state from before the last round; "nothing-to-undo" at
/// round 0.
void undo(SessionState& s);

/// Boxes of the detail patches for a focus crop: the crop itself when it is
/// at most twice the detail size, otherwise four overlapping quadrant tiles
/// that contain unknown tri-map pixels.
std::vector<PixelBox> detail_patches(const PixelBox& focus, const BinaryMask& unknown, int detail_size);

}  // namespace fcxl
