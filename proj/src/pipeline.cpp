#include "fcxl/pipeline.hpp"

#include <chrono>
#include <cmath>

#include "fcxl/mask_ops.hpp"

namespace fcxl {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

void check_backend_map(const ScoreMap& m, Size expected, const std::string& backend, const char* stage) {
  if (m.size() != expected) {
    throw BackendError("backend-dim-mismatch", backend + " returned a " + stage + " map of the wrong size");
  }
  m.check_finite();
}

BiMap crop_bimap(const CropTransform& t, const BiMap& b) {
  return {t.apply_to_map(b.positive), t.apply_to_map(b.negative)};
}

bool accumulates(const Interaction& i) {
  return i.kind() == InteractionKind::click || i.kind() == InteractionKind::scribble;
}

}  // namespace

ScoreMap refine_blend(const RefineBundle& b) {
  require_same_size(b.coarse_logits.size(), b.detail_logits.size(), "refine bundle");
  require_same_size(b.coarse_logits.size(), b.boundary_logits.size(), "refine bundle");
  ScoreMap out(b.coarse_logits.size());
  const auto ml = b.coarse_logits.data();
  const auto md = b.detail_logits.data();
  const auto mb = b.boundary_logits.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const double w = sigmoid(mb[i]);
    dst[i] = static_cast<float>(w * md[i] + (1.0 - w) * ml[i]);
  }
  return out;
}

TriMap build_trimap(const ScoreMap& primitive_logits, const BiMap& bimap, double t_lo, double t_hi) {
  if (!(t_lo < t_hi)) throw Error("bad-trimap-thresholds", "t_lo must be below t_hi");
  require_same_size(primitive_logits.size(), bimap.size(), "tri-map inputs");
  const Size size = primitive_logits.size();
  TriMap t{BinaryMask(size), BinaryMask(size), BinaryMask(size)};
  const auto logits = primitive_logits.data();
  const auto pos = bimap.positive.data();
  const auto neg = bimap.negative.data();
  auto fg = t.fg.data();
  auto bg = t.bg.data();
  auto unknown = t.unknown.data();
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double p = sigmoid(logits[i]);
    fg[i] = (p >= t_hi || pos[i]) ? 1 : 0;
    bg[i] = (!fg[i] && (p <= t_lo || neg[i])) ? 1 : 0;
    unknown[i] = (!fg[i] && !bg[i]) ? 1 : 0;
  }
  return t;
}

BinaryMask progressive_merge(const BinaryMask& prev, const BinaryMask& new_pred, Pixel anchor, bool active) {
  require_same_size(prev.size(), new_pred.size(), "progressive merge");
  if (!active) return new_pred;
  const BinaryMask update = largest_component(xor_diff(prev, new_pred), Connectivity::eight, anchor);
  BinaryMask out = prev;
  auto dst = out.data();
  const auto src = new_pred.data();
  const auto upd = update.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (upd[i]) dst[i] = src[i];
  }
  return out;
}

SessionState SessionState::start(RgbImage image, std::optional<BinaryMask> initial_mask, CropConfig cfg) {
  cfg.validate();
  SessionState s;
  const Size size = image.size();
  s.image = std::move(image);
  s.cfg = cfg;
  s.bimap = BiMap::empty(size);
  if (initial_mask) {
    require_same_size(initial_mask->size(), size, "initial mask");
    s.started_from_mask = initial_mask->any();
    s.prev_mask = std::move(*initial_mask);
  } else {
    s.prev_mask = BinaryMask(size);
  }
  return s;
}

std::vector<PixelBox> detail_patches(const PixelBox& focus, const BinaryMask& unknown, int detail_size) {
  if (std::max(focus.width(), focus.height()) <= 2 * detail_size) return {focus};
  const int tw = (focus.width() * 3 + 4) / 5;
  const int th = (focus.height() * 3 + 4) / 5;
  std::vector<PixelBox> out;
  for (int qy = 0; qy < 2; ++qy) {
    for (int qx = 0; qx < 2; ++qx) {
      const int x0 = qx == 0 ? focus.x0 : focus.x1 - tw;
      const int y0 = qy == 0 ? focus.y0 : focus.y1 - th;
      const PixelBox tile{x0, y0, x0 + tw, y0 + th};
      bool has_unknown = false;
      for (int y = tile.y0; y < tile.y1 && !has_unknown; ++y) {
        for (int x = tile.x0; x < tile.x1; ++x) {
          if (unknown(x, y)) {
            has_unknown = true;
            break;
          }
        }
      }
      if (has_unknown) out.push_back(tile);
    }
  }
  return out;
}

RoundResult run_round(SessionState& s, SegmenterBackend& backend, const Interaction& i) {
  const auto t_start = std::chrono::steady_clock::now();
  const Size dims = s.image.size();
  validate_interaction(i, dims);
  const BinaryMask raster = interaction_raster(i, dims);
  const Pixel anchor = interaction_anchor(i, dims);
  const BiMap round_bimap = encode_bimap(i, dims, &s.bimap);

  RoundResult result;
  result.anchor = anchor;
  // A void previous mask means there is nothing to zoom in on yet.
  result.target_box = s.prev_mask.any() ? select_target_crop(s.prev_mask, raster, s.cfg, dims)
                                        : PixelBox::full(dims);
  if (s.cfg.square) result.target_box = square_up(result.target_box, dims);

  CallContext ctx;
  ctx.session = s.session_id;
  ctx.round = s.round;
  ctx.full_size = dims;
  ctx.ground_truth = s.ground_truth ? &*s.ground_truth : nullptr;
  ctx.context_token = s.context_token;

  // Coarse stage on the target crop.
  const Size object{s.cfg.object_size, s.cfg.object_size};
  const CropTransform target = make_transform(result.target_box, object);
  ctx.source_box = result.target_box;
  const RgbImage obj_image = target.apply_to_map(s.image);
  const BiMap obj_bimap = crop_bimap(target, round_bimap);
  const BinaryMask obj_prev = target.apply_to_map(s.prev_mask);
  const auto t_coarse = std::chrono::steady_clock::now();
  const ScoreMap coarse_logits = backend.coarse_segment({obj_image, obj_bimap, obj_prev, ctx});
  result.timings.coarse_ms = elapsed_ms(t_coarse);
  result.timings.coarse_size = object;
  check_backend_map(coarse_logits, object, backend.name(), "coarse");

  ScoreMap logits = mask_to_logits(s.prev_mask);
  paste(logits, target.to_source(coarse_logits, Interp::bilinear), result.target_box);
  const BinaryMask coarse_mask = threshold_logits(logits);

  result.focus_box = select_focus_crop(s.prev_mask, coarse_mask, anchor, s.cfg, dims);
  if (s.cfg.square) result.focus_box = square_up(result.focus_box, dims);

  // Detail stage: refine the focus region and blend it into the coarse logits.
  if (backend.has_refine()) {
    const Size detail{s.cfg.detail_size, s.cfg.detail_size};
    const TriMap full_trimap = build_trimap(logits, round_bimap, s.trimap_lo, s.trimap_hi);
    const ScoreMap primitive = logits;
    const auto t_refine = std::chrono::steady_clock::now();
    for (const PixelBox& patch : detail_patches(result.focus_box, full_trimap.unknown, s.cfg.detail_size)) {
      const CropTransform t = make_transform(patch, detail);
      ctx.source_box = patch;
      const RgbImage img = t.apply_to_map(s.image);
      const BiMap bm = crop_bimap(t, round_bimap);
      const ScoreMap ml = t.apply_to_map(primitive, Interp::bilinear);
      const TriMap tri = build_trimap(ml, bm, s.trimap_lo, s.trimap_hi);
      RefineOutput out = backend.refine({img, bm, ml, tri, ctx});
      check_backend_map(out.detail_logits, detail, backend.name(), "detail");
      check_backend_map(out.boundary_logits, detail, backend.name(), "boundary");
      const ScoreMap blended = refine_blend({ml, std::move(out.detail_logits), std::move(out.boundary_logits)});
      paste(logits, t.to_source(blended, Interp::bilinear), patch);
      ++result.timings.refine_patches;
    }
    result.timings.refine_ms = elapsed_ms(t_refine);
    if (result.timings.refine_patches > 0) result.timings.refine_size = detail;
  }

  const BinaryMask new_pred = threshold_logits(logits);
  const bool active = s.round >= s.progressive_active_after || s.started_from_mask;
  result.mask = progressive_merge(s.prev_mask, new_pred, anchor, active);

  s.history.push_back({i, s.prev_mask, s.bimap});
  s.prev_mask = result.mask;
  if (accumulates(i)) s.bimap = round_bimap;
  ++s.round;
  result.timings.total_ms = elapsed_ms(t_start);
  return result;
}

void prepare_context(SessionState& s, SegmenterBackend& backend) {
  if (!backend.has_context()) return;
  const RgbImage resized = resize(s.image, {s.cfg.context_size, s.cfg.context_size});
  s.context_token = backend.context_precompute(resized, s.session_id);
}

void undo(SessionState& s) {
  if (s.round == 0 || s.history.empty()) throw Error("nothing-to-undo", "no round to undo");
  RoundRecord last = std::move(s.history.back());
  s.history.pop_back();
  s.prev_mask = std::move(last.mask_before);
  s.bimap = std::move(last.bimap_before);
  --s.round;
}

}  // namespace fcxl
