#include "fcxl/crop.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fcxl {

namespace {

constexpr double kRoundSlack = 1e-9;

}  // namespace

PixelBox clamp(const PixelBox& b, Size bounds) {
  return {std::clamp(b.x0, 0, bounds.width), std::clamp(b.y0, 0, bounds.height),
          std::clamp(b.x1, 0, bounds.width), std::clamp(b.y1, 0, bounds.height)};
}

PixelBox intersect(const PixelBox& a, const PixelBox& b) {
  return {std::max(a.x0, b.x0), std::max(a.y0, b.y0), std::min(a.x1, b.x1),
          std::min(a.y1, b.y1)};
}

PixelBox unite(const PixelBox& a, const PixelBox& b) {
  return {std::min(a.x0, b.x0), std::min(a.y0, b.y0), std::max(a.x1, b.x1),
          std::max(a.y1, b.y1)};
}

void CropConfig::validate() const {
  if (r_tc < 1.0 || r_fc < 1.0) throw Error("bad-crop-config", "expansion ratios must be >= 1");
  if (context_size <= 0 || object_size <= 0 || detail_size <= 0) {
    throw Error("bad-crop-config", "crop sizes must be positive");
  }
}

PixelBox bbox_of(const BinaryMask& m) {
  int x0 = m.width(), y0 = m.height(), x1 = -1, y1 = -1;
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (!m(x, y)) continue;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
    }
  }
  if (x1 < 0) throw Error("empty-mask-bbox", "bounding box of an empty mask");
  return {x0, y0, x1 + 1, y1 + 1};
}

PixelBox expand(const PixelBox& b, double ratio, Size bounds) {
  if (ratio < 1.0) throw Error("bad-ratio", "expansion ratio must be >= 1");
  const double cx = 0.5 * (b.x0 + b.x1);
  const double cy = 0.5 * (b.y0 + b.y1);
  const double hw = 0.5 * b.width() * ratio;
  const double hh = 0.5 * b.height() * ratio;
  const PixelBox grown{static_cast<int>(std::floor(cx - hw + kRoundSlack)),
                       static_cast<int>(std::floor(cy - hh + kRoundSlack)),
                       static_cast<int>(std::ceil(cx + hw - kRoundSlack)),
                       static_cast<int>(std::ceil(cy + hh - kRoundSlack))};
  return clamp(unite(grown, b), bounds);
}

BinaryMask box_mask(const PixelBox& b, Size frame) {
  BinaryMask out(frame);
  const PixelBox c = clamp(b, frame);
  for (int y = c.y0; y < c.y1; ++y) {
    for (int x = c.x0; x < c.x1; ++x) out(x, y) = 1;
  }
  return out;
}

CropTransform::CropTransform(const PixelBox& source_box, Size target)
    : box_(source_box), target_(target) {
  if (!source_box.valid()) throw Error("degenerate-box", "crop box has no area");
  if (target.width <= 0 || target.height <= 0) {
    throw Error("bad-dims", "crop target dimensions must be positive");
  }
  sx_ = static_cast<double>(target.width) / source_box.width();
  sy_ = static_cast<double>(target.height) / source_box.height();
}

PointF CropTransform::apply_to_point(PointF p) const {
  return {(p.x - box_.x0) * sx_, (p.y - box_.y0) * sy_};
}

PointF CropTransform::invert_point(PointF p) const {
  return {p.x / sx_ + box_.x0, p.y / sy_ + box_.y0};
}

Pixel CropTransform::apply_to_pixel(Pixel p) const {
  const PointF t = apply_to_point({p.x + 0.5, p.y + 0.5});
  return {std::clamp(static_cast<int>(std::floor(t.x)), 0, target_.width - 1),
          std::clamp(static_cast<int>(std::floor(t.y)), 0, target_.height - 1)};
}

Pixel CropTransform::invert_pixel(Pixel p) const {
  const PointF s = invert_point({p.x + 0.5, p.y + 0.5});
  return {std::clamp(static_cast<int>(std::floor(s.x)), box_.x0, box_.x1 - 1),
          std::clamp(static_cast<int>(std::floor(s.y)), box_.y0, box_.y1 - 1)};
}

RgbImage CropTransform::apply_to_map(const RgbImage& img) const {
  return resize(crop(img, box_), target_);
}

BinaryMask CropTransform::apply_to_map(const BinaryMask& m) const {
  return resize(crop(m, box_), target_);
}

ScoreMap CropTransform::apply_to_map(const ScoreMap& m, Interp mode) const {
  return resize(crop(m, box_), target_, mode);
}

ScoreMap CropTransform::to_source(const ScoreMap& crop_map, Interp mode) const {
  require_same_size(crop_map.size(), target_, "crop-space map");
  return resize(crop_map, box_.size(), mode);
}

BinaryMask CropTransform::to_source(const BinaryMask& crop_map) const {
  require_same_size(crop_map.size(), target_, "crop-space mask");
  return resize(crop_map, box_.size());
}

CropTransform make_transform(const PixelBox& b, Size target) { return CropTransform(b, target); }

void paste(ScoreMap& dst, const ScoreMap& src, const PixelBox& box) {
  require_same_size(src.size(), box.size(), "paste");
  for (int y = 0; y < box.height(); ++y) {
    for (int x = 0; x < box.width(); ++x) dst(box.x0 + x, box.y0 + y) = src(x, y);
  }
}

void paste(BinaryMask& dst, const BinaryMask& src, const PixelBox& box) {
  require_same_size(src.size(), box.size(), "paste");
  for (int y = 0; y < box.height(); ++y) {
    for (int x = 0; x < box.width(); ++x) dst(box.x0 + x, box.y0 + y) = src(x, y);
  }
}

PixelBox select_target_crop(const BinaryMask& prev_mask, const BinaryMask& interaction_extent,
                            const CropConfig& cfg, Size bounds) {
  const BinaryMask both = prev_mask | interaction_extent;
  if (!both.any()) return PixelBox::full(bounds);
  return expand(bbox_of(both), cfg.r_tc, bounds);
}

PixelBox select_focus_crop(const BinaryMask& prev_mask, const BinaryMask& coarse_pred,
                           Pixel new_click, const CropConfig& cfg, Size bounds) {
  const BinaryMask diff = xor_diff(prev_mask, coarse_pred);
  if (!diff.any()) {
    const int side = std::max(1, std::min(bounds.width, bounds.height) / 8);
    const PixelBox centered{new_click.x - side / 2, new_click.y - side / 2,
                            new_click.x - side / 2 + side, new_click.y - side / 2 + side};
    return expand(centered, cfg.r_fc, bounds);
  }
  const BinaryMask region = largest_component(diff, Connectivity::eight, new_click);
  return expand(bbox_of(region), cfg.r_fc, bounds);
}

PixelBox square_up(const PixelBox& b, Size bounds) {
  const int side = std::max(b.width(), b.height());
  auto place = [](int lo, int hi, int side, int limit) {
    int start = lo - (side - (hi - lo)) / 2;
    start = std::min(start, limit - side);
    start = std::max(start, 0);
    return std::pair{start, std::min(start + side, limit)};
  };
  const auto [x0, x1] = place(b.x0, b.x1, side, bounds.width);
  const auto [y0, y1] = place(b.y0, b.y1, side, bounds.height);
  return {x0, y0, x1, y1};
}

}  // namespace fcxl
