#include "fcxl/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "fcxl/mask_ops.hpp"
#include "fcxl/random.hpp"
#include "fcxl/skeleton.hpp"
#include "fcxl/slic.hpp"

namespace fcxl {

namespace {

std::vector<Pixel> pixels_of(const BinaryMask& m) {
  std::vector<Pixel> out;
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (m(x, y)) out.push_back({x, y});
    }
  }
  return out;
}

Pixel pick(const std::vector<Pixel>& pool, Rng& rng) { return pool[rng.below(pool.size())]; }

BinaryMask largest_error_region(const BinaryMask& gt, const BinaryMask& pred) {
  require_same_size(gt.size(), pred.size(), "ground truth vs prediction");
  const BinaryMask error = xor_diff(gt, pred);
  if (!error.any()) throw Error("already-perfect", "prediction already equals the ground truth");
  return largest_component(error);
}

BinaryMask single_pixel_fallback(const BinaryMask& mask) {
  BinaryMask out(mask.size());
  out.set(*deepest_pixel(mask), true);
  return out;
}

BinaryMask bezier_style(const BinaryMask& mask, int thickness, Rng& rng) {
  const int radius = thickness / 2;
  BinaryMask support = erode(mask, Kernel::disk(radius));
  if (!support.any()) {
    support = mask;
    thickness = 1;
  }
  const auto pool = pixels_of(support);
  ScribblePath path;
  path.thickness = thickness;
  const int n = rng.uniform_int(2, 4);
  for (int i = 0; i < n; ++i) path.control_points.push_back(pick(pool, rng));
  BinaryMask out = rasterize_bezier(path, mask.size(), &support);
  return out.any() ? out : single_pixel_fallback(mask);
}

BinaryMask axial_style(const BinaryMask& mask, int thickness) {
  const BinaryMask skel = medial_axis(mask);
  if (!skel.any()) return single_pixel_fallback(mask);
  return dilate(skel, Kernel::disk(thickness / 2)) & mask;
}

BinaryMask boundary_style(const BinaryMask& mask, int thickness, Rng& rng) {
  const BinaryMask contour = mask & ~erode(mask, Kernel::disk(1));
  const auto pool = pixels_of(contour);
  if (pool.empty()) return single_pixel_fallback(mask);
  const PixelBox b = bbox_of(mask);
  const Pixel c = pick(pool, rng);
  const double reach = rng.uniform(0.25, 0.5) * std::max(b.width(), b.height()) + 1.0;
  BinaryMask stretch(mask.size());
  for (const auto& p : pool) {
    if (std::hypot(p.x - c.x, p.y - c.y) <= reach) stretch.set(p, true);
  }
  return dilate(stretch, Kernel::disk(thickness / 2));
}

}  // namespace

Click eval_click(const BinaryMask& gt, const BinaryMask& pred) {
  const BinaryMask region = largest_error_region(gt, pred);
  const Pixel p = *deepest_pixel(region);
  return {p.x, p.y, gt.at(p) ? Polarity::positive : Polarity::negative, 0};
}

ScribbleSim eval_scribble(const BinaryMask& gt, const BinaryMask& pred, std::optional<int> max_len_cap) {
  ScribbleSim out;
  out.region = largest_error_region(gt, pred);
  const Pixel deepest = *deepest_pixel(out.region);
  out.scribble.polarity = gt.at(deepest) ? Polarity::positive : Polarity::negative;
  out.scribble.path.thickness = 3;

  const SkeletonGraph forest = break_cycles(build_radius_graph(medial_axis(out.region), 3.0));
  GraphPath longest = longest_path(forest);
  if (max_len_cap && *max_len_cap >= 2 && static_cast<int>(longest.vertices.size()) > *max_len_cap) {
    const auto skip = (longest.vertices.size() - static_cast<std::size_t>(*max_len_cap)) / 2;
    longest.vertices = std::vector<int>(longest.vertices.begin() + static_cast<std::ptrdiff_t>(skip),
                                        longest.vertices.begin() + static_cast<std::ptrdiff_t>(skip) + *max_len_cap);
  }
  if (longest.vertices.size() < 2) {
    out.fell_back_to_click = true;
    out.scribble.path.control_points = {deepest, deepest};
    BinaryMask disk(gt.size());
    stamp_disk(disk, deepest, kClickRadius);
    out.scribble.raster = std::move(disk);
    return out;
  }
  for (int v : longest.vertices) out.scribble.path.control_points.push_back(forest.vertices[v]);
  out.scribble.raster = rasterize_bezier(out.scribble.path, gt.size(), &out.region);
  return out;
}

ScribbleStyle scribble_style_from_string(const std::string& s) {
  if (s == "bezier") return ScribbleStyle::bezier;
  if (s == "axial") return ScribbleStyle::axial;
  if (s == "boundary") return ScribbleStyle::boundary;
  if (s == "composed") return ScribbleStyle::composed;
  throw Error("bad-style", "unknown scribble style '" + s + "'");
}

std::string to_string(ScribbleStyle s) {
  switch (s) {
    case ScribbleStyle::bezier: return "bezier";
    case ScribbleStyle::axial: return "axial";
    case ScribbleStyle::boundary: return "boundary";
    case ScribbleStyle::composed: return "composed";
  }
  return "unknown";
}

BinaryMask gen_training_scribble(const BinaryMask& mask, ScribbleStyle style, std::uint64_t seed) {
  if (!mask.any()) throw Error("empty-mask", "cannot draw a scribble on an empty mask");
  Rng rng(seed);
  const int thickness = rng.uniform_int(3, 7);
  switch (style) {
    case ScribbleStyle::bezier: return bezier_style(mask, thickness, rng);
    case ScribbleStyle::axial: return axial_style(mask, thickness);
    case ScribbleStyle::boundary: return boundary_style(mask, thickness, rng);
    case ScribbleStyle::composed: break;
  }
  std::array<ScribbleStyle, 3> styles{ScribbleStyle::bezier, ScribbleStyle::axial, ScribbleStyle::boundary};
  // Partial Fisher-Yates: the first k entries are a uniform k-subset.
  const int k = rng.uniform_int(1, 3);
  for (int i = 0; i < k; ++i) std::swap(styles[i], styles[i + rng.below(3 - i)]);
  BinaryMask out(mask.size());
  for (int i = 0; i < k; ++i) {
    out |= gen_training_scribble(mask, styles[i], rng.split(static_cast<std::uint64_t>(i) + 1).next_u64());
  }
  return out;
}

namespace {

int draw_truncated_geometric(int lo, int hi, double decay, Rng& rng) {
  std::vector<double> weights;
  for (int n = lo; n <= hi; ++n) weights.push_back(std::pow(decay, n - lo));
  return lo + static_cast<int>(rng.categorical(weights));
}

}  // namespace

double truncated_geometric_mean(int lo, int hi, double decay) {
  double num = 0.0;
  double den = 0.0;
  for (int n = lo; n <= hi; ++n) {
    const double w = std::pow(decay, n - lo);
    num += n * w;
    den += w;
  }
  return num / den;
}

std::vector<Click> gen_training_clicks(const BinaryMask& gt, const TrainingClickParams& params,
                                       std::uint64_t seed) {
  if (!gt.any()) throw Error("empty-mask", "cannot place clicks on an empty mask");
  if (params.n_pos_max < 1 || params.n_neg_max < 0 || params.decay < 0.0 || params.decay > 1.0) {
    throw Error("bad-click-params", "need n_pos_max >= 1, n_neg_max >= 0, decay in [0, 1]");
  }
  Rng rng(seed);
  const int n_pos = draw_truncated_geometric(1, params.n_pos_max, params.decay, rng);
  const int n_neg = draw_truncated_geometric(0, params.n_neg_max, params.decay, rng);
  const auto fg = pixels_of(gt);
  auto bg = pixels_of(dilate(gt, Kernel::disk(params.negative_band)) & ~gt);
  if (bg.empty()) bg = pixels_of(~gt);

  std::vector<Click> out;
  for (int i = 0; i < n_pos; ++i) {
    const Pixel p = pick(fg, rng);
    out.push_back({p.x, p.y, Polarity::positive, static_cast<int>(out.size())});
  }
  for (int i = 0; i < n_neg && !bg.empty(); ++i) {
    const Pixel p = pick(bg, rng);
    out.push_back({p.x, p.y, Polarity::negative, static_cast<int>(out.size())});
  }
  return out;
}

PixelBox simulate_box(const BinaryMask& gt, double jitter_frac, std::uint64_t seed) {
  if (jitter_frac < 0.0 || jitter_frac >= 0.5) throw Error("bad-jitter", "jitter_frac must be in [0, 0.5)");
  const PixelBox tight = bbox_of(gt);
  Rng rng(seed);
  auto shift = [&](int extent) {
    return static_cast<int>(std::trunc(rng.uniform(-jitter_frac, jitter_frac) * extent));
  };
  PixelBox b{tight.x0 + shift(tight.width()), tight.y0 + shift(tight.height()),
             tight.x1 + shift(tight.width()), tight.y1 + shift(tight.height())};
  b = clamp(b, gt.size());
  return b.valid() ? b : tight;
}

double PerturbLevel::lo() const { return 0.95 - 0.1 * level; }
double PerturbLevel::hi() const { return 1.0 - 0.1 * level; }

PerturbLevel PerturbLevel::from_int(int level) {
  if (level < 1 || level > 5) throw Error("bad-level", "perturbation level must be in 1..5");
  return {level};
}

BinaryMask perturb_mask(const BinaryMask& gt, PerturbLevel level, std::uint64_t seed) {
  if (!gt.any()) throw Error("empty-mask", "cannot perturb an empty mask");
  PerturbLevel::from_int(level.level);
  // Rounded so that e.g. 0.85 compares as the decimal it names.
  const double lo = std::round(level.lo() * 100.0) / 100.0;
  const double hi = std::round(level.hi() * 100.0) / 100.0;
  Rng rng(seed);
  BinaryMask cur = gt;
  double cur_iou = 1.0;
  int max_radius = 5;
  double window_scale = 1.0;
  const PixelBox gt_box = bbox_of(gt);
  const int extent = std::max(gt_box.width(), gt_box.height());

  for (int attempt = 0; attempt < 500; ++attempt) {
    if (cur_iou >= lo && cur_iou <= hi) return cur;
    const int radius = rng.uniform_int(1, max_radius);
    const Kernel kernel = rng.bernoulli(0.5) ? Kernel::disk(radius) : Kernel::rect(radius, radius);
    const MorphOp op = rng.bernoulli(0.5) ? MorphOp::erode : MorphOp::dilate;

    const auto edge = pixels_of(boundary_band(cur, 1));
    if (edge.empty()) break;
    const Pixel c = pick(edge, rng);
    const int half = std::max(2, static_cast<int>(window_scale * rng.uniform(0.15, 0.5) * extent));
    const PixelBox window = clamp({c.x - half, c.y - half, c.x + half + 1, c.y + half + 1}, gt.size());
    // Margin so the crop edge cannot leak into the window.
    const PixelBox work = clamp({window.x0 - radius, window.y0 - radius, window.x1 + radius, window.y1 + radius},
                                gt.size());
    const BinaryMask patch = morphology(crop(cur, work), op, kernel);

    BinaryMask candidate = cur;
    for (int y = window.y0; y < window.y1; ++y) {
      for (int x = window.x0; x < window.x1; ++x) candidate(x, y) = patch(x - work.x0, y - work.y0);
    }
    const double next_iou = iou(candidate, gt);
    if (next_iou < lo) {
      max_radius = std::max(1, max_radius - 1);
      window_scale = std::max(0.05, window_scale * 0.7);
      continue;
    }
    if (next_iou >= cur_iou) continue;
    cur = std::move(candidate);
    cur_iou = next_iou;
  }
  if (cur_iou >= lo && cur_iou <= hi) return cur;
  throw Error("perturb-unreachable", "could not reach IoU range [" + std::to_string(lo) + ", " +
                                         std::to_string(hi) + "] within 500 steps");
}

std::string to_string(DefectType t) {
  switch (t) {
    case DefectType::boundary: return "boundary";
    case DefectType::external: return "external";
    case DefectType::internal: return "internal";
  }
  return "unknown";
}

void DefectSpec::validate() const {
  double sum = 0.0;
  for (double p : error_type_probs) {
    if (p < 0.0) throw Error("bad-defect-spec", "error-type probabilities must be non-negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw Error("bad-defect-spec", "error-type probabilities must sum to 1");
  if (!(min_iou > 0.0 && min_iou < max_iou && max_iou <= 1.0)) {
    throw Error("bad-defect-spec", "need 0 < min_iou < max_iou <= 1");
  }
  if (pixel_number_choices.empty()) throw Error("bad-defect-spec", "no superpixel counts given");
  for (int n : pixel_number_choices) {
    if (n < 1) throw Error("bad-defect-spec", "superpixel counts must be positive");
  }
  if (boundary_band < 1 || max_restarts < 1 || max_steps < 1) {
    throw Error("bad-defect-spec", "band width, restart and step caps must be positive");
  }
}

namespace {

struct SegmentStats {
  std::size_t area = 0;
  std::size_t in_gt = 0;
  std::size_t in_band = 0;
  std::size_t in_halo = 0;  // pixels in dilate(gt, 1), i.e. touching gt 8-connectedly
};

// Applies one error of the given type; returns false when no superpixel
// qualifies.
bool merge_superpixels(DefectType type, const RegionLabeling& sp, const BinaryMask& gt,
                       const BinaryMask& band, const BinaryMask& halo, BinaryMask& sim, Rng& rng) {
  std::vector<SegmentStats> stats(static_cast<std::size_t>(sp.region_count) + 1);
  for (std::size_t i = 0; i < sp.labels.size(); ++i) {
    auto& s = stats[static_cast<std::size_t>(sp.labels[i])];
    ++s.area;
    s.in_gt += gt.data()[i];
    s.in_band += band.data()[i];
    s.in_halo += halo.data()[i];
  }
  std::vector<int> candidates;
  for (int l = 1; l <= sp.region_count; ++l) {
    const auto& s = stats[static_cast<std::size_t>(l)];
    const bool ok = type == DefectType::boundary   ? s.in_band > 0
                    : type == DefectType::external ? s.in_gt == 0 && s.in_halo > 0
                                                   : s.in_gt == s.area;
    if (ok) candidates.push_back(l);
  }
  if (candidates.empty()) return false;
  const int label = candidates[rng.below(candidates.size())];
  const bool add = type == DefectType::external || (type == DefectType::boundary && rng.bernoulli(0.5));
  auto dst = sim.data();
  for (std::size_t i = 0; i < sp.labels.size(); ++i) {
    if (sp.labels[i] == label) dst[i] = add ? 1 : 0;
  }
  return true;
}

}  // namespace

DefectResult simulate_defective_mask(const RgbImage& image, const BinaryMask& gt, const DefectSpec& spec) {
  spec.validate();
  require_same_size(image.size(), gt.size(), "image vs ground truth");
  if (gt.count() < 300) throw Error("gt-too-small", "defect simulation needs at least 300 foreground pixels");
  const BinaryMask band = boundary_band(gt, spec.boundary_band);
  const BinaryMask halo = dilate(gt, Kernel::rect(1, 1));
  std::vector<int> counts;
  for (int n : spec.pixel_number_choices) {
    if (static_cast<std::size_t>(n) <= gt.size().area()) counts.push_back(n);
  }
  if (counts.empty()) throw Error("bad-defect-spec", "every superpixel count exceeds the image size");

  Rng rng(spec.seed);
  DefectResult result;
  const std::span<const double> probs(spec.error_type_probs);
  for (int restart = 0; restart < spec.max_restarts; ++restart) {
    BinaryMask sim = gt;
    for (int step = 0; step < spec.max_steps; ++step) {
      const auto type = static_cast<DefectType>(rng.categorical(probs));
      result.trace.push_back(type);
      SlicParams params;
      params.n_segments = counts[rng.below(counts.size())];
      params.seed = rng.next_u64();
      params.jitter = 0.25;
      const RegionLabeling sp = slic(image, params);
      if (!merge_superpixels(type, sp, gt, band, halo, sim, rng)) continue;
      const double v = iou(sim, gt);
      if (v < spec.min_iou) break;
      if (v > spec.max_iou) continue;
      result.mask = std::move(sim);
      result.iou = v;
      result.restarts = restart;
      return result;
    }
  }
  throw Error("defect-unreachable", "no defective mask in range after " + std::to_string(spec.max_restarts) +
                                        " restarts");
}

}  // namespace fcxl
