#include "fcxl/oracles.hpp"

#include "fcxl/mask_ops.hpp"

namespace fcxl {

RefineOutput SegmenterBackend::refine(const RefineRequest&) {
  throw BackendError("no-refine", name() + " has no refinement stage");
}

std::string SegmenterBackend::context_precompute(const RgbImage&, const std::string&) { return {}; }

BinaryMask ground_truth_crop(const CallContext& ctx, Size crop_size) {
  if (ctx.ground_truth == nullptr) {
    throw BackendError("oracle-needs-gt", "oracle backends require a ground-truth mask");
  }
  return make_transform(ctx.source_box, crop_size).apply_to_map(*ctx.ground_truth);
}

ScoreMap PerfectOracle::coarse_segment(const CoarseRequest& req) {
  return mask_to_logits(ground_truth_crop(req.ctx, req.image.size()));
}

DelayOracle::DelayOracle(int k) : k_(k) {
  if (k < 1) throw Error("bad-delay", "delay must be at least 1 round");
}

ScoreMap DelayOracle::coarse_segment(const CoarseRequest& req) {
  if (req.ctx.round + 1 >= k_) return mask_to_logits(ground_truth_crop(req.ctx, req.image.size()));
  return mask_to_logits(req.prev_mask);
}

ScoreMap NeverOracle::coarse_segment(const CoarseRequest& req) {
  return ScoreMap(req.image.size(), -10.0f);
}

ScoreMap IdentityOracle::coarse_segment(const CoarseRequest& req) {
  return mask_to_logits(req.bimap.positive);
}

ScoreMap EchoOracle::coarse_segment(const CoarseRequest& req) { return mask_to_logits(req.prev_mask); }

}  // namespace fcxl
