#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fcxl/mask.hpp"

namespace fcxl {

enum class Connectivity { four = 4, eight = 8 };

/// |a & b| / |a | b|. Two empty masks agree perfectly and score 1.0.
double iou(const BinaryMask& a, const BinaryMask& b);

BinaryMask xor_diff(const BinaryMask& a, const BinaryMask& b);

/// Labels foreground components 1..K in order of first encounter during a
/// row-major scan.
RegionLabeling connected_components(const BinaryMask& m,
                                    Connectivity conn = Connectivity::eight);

/// Without an anchor: the component of maximal area (ties -> lowest label).
/// With an anchor: the component containing it, or, when the anchor lies on
/// background, the component nearest to it (ties -> lowest label).
BinaryMask largest_component(const BinaryMask& m,
                             Connectivity conn = Connectivity::eight,
                             std::optional<Pixel> anchor = std::nullopt);

struct Kernel {
  enum class Shape { disk, rect };
  Shape shape = Shape::disk;
  int rx = 1;  // disk radius, or rect half-width
  int ry = 1;  // rect half-height (ignored for disks)

  static Kernel disk(int radius) { return {Shape::disk, radius, radius}; }
  static Kernel rect(int half_w, int half_h) { return {Shape::rect, half_w, half_h}; }

  // Half-width of the kernel on row offset dy, or -1 if the row is empty.
  int half_width(int dy) const;
};

enum class MorphOp { erode, dilate };

/// Minkowski erosion/dilation; pixels outside the image are background.
BinaryMask morphology(const BinaryMask& m, MorphOp op, const Kernel& k);
inline BinaryMask erode(const BinaryMask& m, const Kernel& k) {
  return morphology(m, MorphOp::erode, k);
}
inline BinaryMask dilate(const BinaryMask& m, const Kernel& k) {
  return morphology(m, MorphOp::dilate, k);
}

/// dilate(m, disk(width)) & ~erode(m, disk(width)).
BinaryMask boundary_band(const BinaryMask& m, int width);

/// Exact squared Euclidean distance from each foreground pixel to the nearest
/// background pixel, with the ring just outside the image counting as
/// background. Zero on background.
std::vector<std::int64_t> squared_distance_transform(const BinaryMask& m);
ScoreMap distance_transform(const BinaryMask& m);

/// Foreground pixel of maximal distance-to-background; ties go to the
/// smallest (y, x). Empty masks yield nullopt.
std::optional<Pixel> deepest_pixel(const BinaryMask& m);

enum class Interp { nearest, bilinear };

// Sampling uses the align-corners=false convention. Binary masks only accept
// nearest sampling ("bilinear-on-binary" otherwise).
BinaryMask resize(const BinaryMask& m, Size target, Interp mode = Interp::nearest);
ScoreMap resize(const ScoreMap& m, Size target, Interp mode);

/// Binarizes logits at probability 0.5 (strictly greater, i.e. logit > 0).
BinaryMask threshold_logits(const ScoreMap& logits);
/// Maps a binary mask to logits of +magnitude / -magnitude.
ScoreMap mask_to_logits(const BinaryMask& m, float magnitude = 10.0f);

}  // namespace fcxl
