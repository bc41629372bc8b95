#pragma once

#include "fcxl/backend.hpp"

namespace fcxl {

/// Returns the ground truth of the crop. Needs CallContext::ground_truth.
class PerfectOracle : public SegmenterBackend {
 public:
  std::string name() const override { return "oracle:perfect"; }
  ScoreMap coarse_segment(const CoarseRequest& req) override;
};

/// Echoes the previous mask until the k-th round, then the ground truth.
class DelayOracle : public SegmenterBackend {
 public:
  explicit DelayOracle(int k);
  std::string name() const override { return "oracle:delay:" + std::to_string(k_); }
  ScoreMap coarse_segment(const CoarseRequest& req) override;

 private:
  int k_;
};

/// Always predicts background.
class NeverOracle : public SegmenterBackend {
 public:
  std::string name() const override { return "oracle:never"; }
  ScoreMap coarse_segment(const CoarseRequest& req) override;
};

/// Returns the positive interaction channel as the mask (a box becomes its
/// rectangle, a coarse mask itself).
class IdentityOracle : public SegmenterBackend {
 public:
  std::string name() const override { return "oracle:identity"; }
  ScoreMap coarse_segment(const CoarseRequest& req) override;
};

/// Returns the previous mask unchanged.
class EchoOracle : public SegmenterBackend {
 public:
  std::string name() const override { return "oracle:echo"; }
  ScoreMap coarse_segment(const CoarseRequest& req) override;
};

/// Ground truth of the crop region resampled to the crop size.
BinaryMask ground_truth_crop(const CallContext& ctx, Size crop_size);

}  // namespace fcxl
