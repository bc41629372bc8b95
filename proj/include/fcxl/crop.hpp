#pragma once

#include "fcxl/image.hpp"
#include "fcxl/mask.hpp"
#include "fcxl/mask_ops.hpp"

namespace fcxl {

/// Half-open integer box: [x0, x1) x [y0, y1).
struct PixelBox {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  Size size() const { return {width(), height()}; }
  bool valid() const { return x0 < x1 && y0 < y1; }
  bool contains(Pixel p) const { return p.x >= x0 && p.x < x1 && p.y >= y0 && p.y < y1; }
  bool contains(const PixelBox& o) const {
    return o.x0 >= x0 && o.y0 >= y0 && o.x1 <= x1 && o.y1 <= y1;
  }
  static PixelBox full(Size s) { return {0, 0, s.width, s.height}; }

  friend bool operator==(const PixelBox&, const PixelBox&) = default;
};

PixelBox clamp(const PixelBox& b, Size bounds);
PixelBox intersect(const PixelBox& a, const PixelBox& b);
PixelBox unite(const PixelBox& a, const PixelBox& b);

struct CropConfig {
  double r_tc = 1.4;
  double r_fc = 1.4;
  int context_size = 1024;
  int object_size = 384;
  int detail_size = 256;
  // Pad crops to a square before resizing, for backends that need it.
  bool square = false;

  void validate() const;
};

/// Tight box over the foreground; throws "empty-mask-bbox" on empty masks.
PixelBox bbox_of(const BinaryMask& m);

/// Scales b about its center by ratio, rounds outward and clamps to bounds.
PixelBox expand(const PixelBox& b, double ratio, Size bounds);

/// Rasterizes a box as a filled rectangle inside a frame of the given size.
BinaryMask box_mask(const PixelBox& b, Size frame);

struct PointF {
  double x = 0.0;
  double y = 0.0;
};

/// Axis-aligned crop of source_box resized to target. Points use continuous
/// coordinates where pixel (i, j) covers [i, i+1) x [j, j+1).
class CropTransform {
 public:
  CropTransform(const PixelBox& source_box, Size target);

  const PixelBox& source_box() const { return box_; }
  Size target() const { return target_; }

  PointF apply_to_point(PointF p) const;
  PointF invert_point(PointF p) const;
  // Pixel-index variants: map pixel centers and round to the nearest pixel.
  Pixel apply_to_pixel(Pixel p) const;
  Pixel invert_pixel(Pixel p) const;

  RgbImage apply_to_map(const RgbImage& img) const;
  BinaryMask apply_to_map(const BinaryMask& m) const;
  ScoreMap apply_to_map(const ScoreMap& m, Interp mode = Interp::bilinear) const;

  /// Resizes a crop-space map back to the source box extent.
  ScoreMap to_source(const ScoreMap& crop_map, Interp mode = Interp::bilinear) const;
  BinaryMask to_source(const BinaryMask& crop_map) const;

 private:
  PixelBox box_;
  Size target_;
  double sx_;
  double sy_;
};

CropTransform make_transform(const PixelBox& b, Size target);

/// Writes src (sized like box) into dst at box.
void paste(ScoreMap& dst, const ScoreMap& src, const PixelBox& box);
void paste(BinaryMask& dst, const BinaryMask& src, const PixelBox& box);

/// expand(bbox_of(prev | interaction), r_tc); the full frame when both are
/// empty.
PixelBox select_target_crop(const BinaryMask& prev_mask, const BinaryMask& interaction_extent,
                            const CropConfig& cfg, Size bounds);

/// expand(bbox_of(anchored component of prev ^ coarse), r_fc). When the two
/// masks agree, falls back to a click-centered box of side min(W, H) / 8
/// expanded by r_fc.
PixelBox select_focus_crop(const BinaryMask& prev_mask, const BinaryMask& coarse_pred,
                           Pixel new_click, const CropConfig& cfg, Size bounds);

/// Smallest square containing b, centered on it and shifted to stay inside
/// bounds (clamped when the square does not fit).
PixelBox square_up(const PixelBox& b, Size bounds);

}  // namespace fcxl
