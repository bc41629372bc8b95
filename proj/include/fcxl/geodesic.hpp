#pragma once

#include "fcxl/backend.hpp"

namespace fcxl {

struct GeodesicParams {
  double alpha = 6.0;
  double beta = 1.0;
  double gamma = 10.0 / 255.0;
  double eps = 1e-6;
  double boundary_logit = 6.0;  // M_b inside the refined band, -M_b outside
  double band_px = 6.0;         // refinement band half-width, in source pixels

  void validate() const;
};

/// Geodesic distance from the seed pixels over the 8-connected pixel graph.
/// A step costs its length plus gamma times the RGB distance; lengths are
/// scaled by (sx, sy) so that resampled crops measure in source pixels. An
/// empty seed set is replaced by the image border.
std::vector<double> geodesic_distance(const RgbImage& image, const BinaryMask& seeds, double gamma,
                                      double sx = 1.0, double sy = 1.0);

/// Model-free backend: logits from the relative geodesic distance to the
/// positive and negative seeds plus a prior from the previous mask. The
/// refinement stage reruns the construction seeded by the tri-map pulled
/// back from the unknown band, so the decision snaps to nearby color edges.
class GeodesicBackend : public SegmenterBackend {
 public:
  explicit GeodesicBackend(GeodesicParams params = {});

  std::string name() const override { return "classical"; }
  ScoreMap coarse_segment(const CoarseRequest& req) override;
  bool has_refine() const override { return true; }
  RefineOutput refine(const RefineRequest& req) override;

 private:
  GeodesicParams p_;
};

}  // namespace fcxl
