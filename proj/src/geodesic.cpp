#include "fcxl/geodesic.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <queue>

#include "fcxl/mask_ops.hpp"

namespace fcxl {

void GeodesicParams::validate() const {
  if (!(alpha > 0.0) || beta < 0.0 || gamma < 0.0 || !(eps > 0.0)) {
    throw Error("bad-geodesic-params", "need alpha > 0, beta >= 0, gamma >= 0, eps > 0");
  }
}

std::vector<double> geodesic_distance(const RgbImage& image, const BinaryMask& seeds, double gamma,
                                      double sx, double sy) {
  require_same_size(image.size(), seeds.size(), "geodesic seeds");
  const int w = image.width();
  const int h = image.height();
  const std::size_t n = image.size().area();
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;

  const bool use_border = !seeds.any();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool seed = use_border ? (x == 0 || y == 0 || x == w - 1 || y == h - 1) : seeds(x, y) != 0;
      if (!seed) continue;
      const std::size_t idx = static_cast<std::size_t>(y) * w + x;
      dist[idx] = 0.0;
      heap.push({0.0, idx});
    }
  }
  static constexpr int kDx[8] = {-1, 0, 1, -1, 1, -1, 0, 1};
  static constexpr int kDy[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
  const double diag = std::hypot(sx, sy);
  while (!heap.empty()) {
    const auto [d, idx] = heap.top();
    heap.pop();
    if (d > dist[idx]) continue;
    const int x = static_cast<int>(idx % w);
    const int y = static_cast<int>(idx / w);
    const auto c = image.pixel(x, y);
    for (int k = 0; k < 8; ++k) {
      const int nx = x + kDx[k];
      const int ny = y + kDy[k];
      if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
      const auto o = image.pixel(nx, ny);
      const double dr = double(c[0]) - o[0];
      const double dg = double(c[1]) - o[1];
      const double db = double(c[2]) - o[2];
      const double step = kDx[k] == 0 ? sy : kDy[k] == 0 ? sx : diag;
      const double nd = d + step + gamma * std::sqrt(dr * dr + dg * dg + db * db);
      const std::size_t nidx = static_cast<std::size_t>(ny) * w + nx;
      if (nd < dist[nidx]) {
        dist[nidx] = nd;
        heap.push({nd, nidx});
      }
    }
  }
  return dist;
}

namespace {

std::pair<double, double> source_scale(const CallContext& ctx, Size crop) {
  if (!ctx.source_box.valid()) return {1.0, 1.0};
  return {static_cast<double>(ctx.source_box.width()) / crop.width,
          static_cast<double>(ctx.source_box.height()) / crop.height};
}

BinaryMask border_mask(Size size) {
  BinaryMask out(size);
  for (int x = 0; x < size.width; ++x) out(x, 0) = out(x, size.height - 1) = 1;
  for (int y = 0; y < size.height; ++y) out(0, y) = out(size.width - 1, y) = 1;
  return out;
}

BinaryMask pull_back(const BinaryMask& region, int radius) {
  if (radius < 1) return region;
  BinaryMask core = erode(region, Kernel::disk(radius));
  return core.any() ? core : region;
}

}  // namespace

GeodesicBackend::GeodesicBackend(GeodesicParams params) : p_(params) { p_.validate(); }

ScoreMap GeodesicBackend::coarse_segment(const CoarseRequest& req) {
  if (!req.bimap.positive.any() && !req.bimap.negative.any() && !req.prev_mask.any()) {
    throw BackendError("no-seeds", "geodesic backend needs an interaction or a previous mask");
  }
  const auto [sx, sy] = source_scale(req.ctx, req.image.size());
  const auto dp = geodesic_distance(req.image, req.bimap.positive, p_.gamma, sx, sy);
  // The crop border stays a background seed after the first negative
  // interaction; a lone negative click would otherwise flood the crop.
  const auto dn = geodesic_distance(req.image, (req.bimap.negative | border_mask(req.image.size())) &
                                                   ~req.bimap.positive, p_.gamma, sx, sy);
  ScoreMap out(req.image.size());
  auto dst = out.data();
  const auto prev = req.prev_mask.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const double rel = (dn[i] - dp[i]) / (dn[i] + dp[i] + p_.eps);
    dst[i] = static_cast<float>(p_.alpha * rel + p_.beta * (2.0 * prev[i] - 1.0));
  }
  return out;
}

RefineOutput GeodesicBackend::refine(const RefineRequest& req) {
  const Size size = req.image.size();
  const auto [sx, sy] = source_scale(req.ctx, size);
  const int radius = static_cast<int>(std::lround(p_.band_px / std::max(sx, sy)));
  const BinaryMask fg = pull_back(req.trimap.fg, radius) | req.bimap.positive;
  const BinaryMask bg = (pull_back(req.trimap.bg, radius) | req.bimap.negative) & ~fg;
  const auto df = geodesic_distance(req.image, fg, p_.gamma, sx, sy);
  const auto db = geodesic_distance(req.image, bg, p_.gamma, sx, sy);
  RefineOutput out{ScoreMap(size), ScoreMap(size)};
  auto detail = out.detail_logits.data();
  auto boundary = out.boundary_logits.data();
  // Without both seed kinds the detail map carries no information.
  const bool seeded = fg.any() && bg.any();
  const auto fgd = fg.data();
  const auto bgd = bg.data();
  for (std::size_t i = 0; i < detail.size(); ++i) {
    detail[i] = static_cast<float>(p_.alpha * (db[i] - df[i]) / (db[i] + df[i] + p_.eps));
    const bool band = !fgd[i] && !bgd[i];
    boundary[i] = static_cast<float>(seeded && band ? p_.boundary_logit : -p_.boundary_logit);
  }
  return out;
}

}  // namespace fcxl
