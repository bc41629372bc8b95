#include "fcxl/slic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "fcxl/random.hpp"

namespace fcxl {

void SlicParams::validate() const {
  if (n_segments < 1) throw Error("bad-slic-params", "n_segments must be >= 1");
  if (iterations < 1) throw Error("bad-slic-params", "iterations must be >= 1");
  if (!(compactness > 0.0)) throw Error("bad-slic-params", "compactness must be > 0");
  if (jitter < 0.0 || jitter >= 0.5) throw Error("bad-slic-params", "jitter must be in [0, 0.5)");
}

std::vector<float> rgb_to_lab(const RgbImage& image) {
  std::array<double, 256> linear{};
  for (int i = 0; i < 256; ++i) {
    const double c = i / 255.0;
    linear[i] = c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
  }
  auto f = [](double t) {
    constexpr double eps = 216.0 / 24389.0;
    constexpr double kappa = 24389.0 / 27.0;
    return t > eps ? std::cbrt(t) : (kappa * t + 16.0) / 116.0;
  };
  const auto src = image.data();
  std::vector<float> lab(src.size());
  for (std::size_t i = 0; i < image.size().area(); ++i) {
    const double r = linear[src[3 * i]];
    const double g = linear[src[3 * i + 1]];
    const double b = linear[src[3 * i + 2]];
    const double x = (0.4124564 * r + 0.3575761 * g + 0.1804375 * b) / 0.95047;
    const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    const double z = (0.0193339 * r + 0.1191920 * g + 0.9503041 * b) / 1.08883;
    const double fx = f(x), fy = f(y), fz = f(z);
    lab[3 * i] = static_cast<float>(116.0 * fy - 16.0);
    lab[3 * i + 1] = static_cast<float>(500.0 * (fx - fy));
    lab[3 * i + 2] = static_cast<float>(200.0 * (fy - fz));
  }
  return lab;
}

namespace {

struct Center {
  double l, a, b, x, y;
};

// Grid shape whose cell count is closest to the request, preferring square
// cells.
std::pair<int, int> grid_shape(Size size, int k) {
  const double step = std::sqrt(static_cast<double>(size.area()) / k);
  std::pair<int, int> best{1, 1};
  double best_score = std::numeric_limits<double>::infinity();
  const int gx = static_cast<int>(size.width / step);
  const int gy = static_cast<int>(size.height / step);
  for (int ny = std::max(1, gy - 1); ny <= std::min(size.height, gy + 2); ++ny) {
    for (int nx = std::max(1, gx - 1); nx <= std::min(size.width, gx + 2); ++nx) {
      const double aspect = std::abs(std::log((static_cast<double>(size.width) / nx) /
                                              (static_cast<double>(size.height) / ny)));
      const double score = std::abs(nx * ny - k) * 1000.0 + aspect;
      if (score < best_score) {
        best_score = score;
        best = {nx, ny};
      }
    }
  }
  return best;
}

// Keeps the largest 4-connected piece of every cluster and absorbs the other
// pieces into the neighbour they share the longest border with.
RegionLabeling enforce_connectivity(Size size, const std::vector<int>& cluster, int n_clusters) {
  const int w = size.width;
  const int h = size.height;
  std::vector<int> comp(size.area(), -1);
  std::vector<int> comp_cluster;
  std::vector<std::size_t> comp_area;
  std::vector<int> queue;
  for (int start = 0; start < static_cast<int>(size.area()); ++start) {
    if (comp[start] >= 0) continue;
    const int id = static_cast<int>(comp_cluster.size());
    const int c = cluster[start];
    comp_cluster.push_back(c);
    comp[start] = id;
    queue.assign(1, start);
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const int px = queue[head] % w;
      const int py = queue[head] / w;
      const int nbrs[4][2] = {{px - 1, py}, {px + 1, py}, {px, py - 1}, {px, py + 1}};
      for (const auto& n : nbrs) {
        if (n[0] < 0 || n[1] < 0 || n[0] >= w || n[1] >= h) continue;
        const int ni = n[1] * w + n[0];
        if (comp[ni] < 0 && cluster[ni] == c) {
          comp[ni] = id;
          queue.push_back(ni);
        }
      }
    }
    comp_area.push_back(queue.size());
  }

  const int n_comp = static_cast<int>(comp_cluster.size());
  std::vector<int> keeper(n_clusters, -1);
  for (int id = 0; id < n_comp; ++id) {
    int& k = keeper[comp_cluster[id]];
    if (k < 0 || comp_area[id] > comp_area[k]) k = id;
  }

  std::map<std::pair<int, int>, int> border;
  auto touch = [&](int a, int b) {
    if (a == b) return;
    ++border[{a, b}];
    ++border[{b, a}];
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int i = y * w + x;
      if (x + 1 < w) touch(comp[i], comp[i + 1]);
      if (y + 1 < h) touch(comp[i], comp[i + w]);
    }
  }

  // Orphans join the anchored neighbour they share the longest border with,
  // sweeping until every piece is anchored to a kept one.
  std::vector<int> owner(n_comp, -1);
  for (int id = 0; id < n_comp; ++id) {
    if (keeper[comp_cluster[id]] == id) owner[id] = id;
  }
  for (bool changed = true; changed;) {
    changed = false;
    for (int id = 0; id < n_comp; ++id) {
      if (owner[id] >= 0) continue;
      int best = -1, best_len = 0;
      for (auto it = border.lower_bound({id, 0}); it != border.end() && it->first.first == id; ++it) {
        if (owner[it->first.second] >= 0 && it->second > best_len) {
          best = it->first.second;
          best_len = it->second;
        }
      }
      if (best >= 0) {
        owner[id] = owner[best];
        changed = true;
      }
    }
  }

  RegionLabeling out{size, std::vector<std::int32_t>(size.area(), 0), 0};
  std::vector<int> group_label(n_comp, 0);
  for (std::size_t i = 0; i < size.area(); ++i) {
    const int g = owner[comp[i]];
    if (group_label[g] == 0) group_label[g] = ++out.region_count;
    out.labels[i] = group_label[g];
  }
  return out;
}

}  // namespace

RegionLabeling slic(const RgbImage& image, const SlicParams& params) {
  params.validate();
  const Size size = image.size();
  const int w = size.width;
  const int h = size.height;
  if (static_cast<std::size_t>(params.n_segments) > size.area()) {
    throw Error("too-many-segments", "n_segments exceeds the pixel count");
  }
  const auto lab = rgb_to_lab(image);
  const auto [nx, ny] = grid_shape(size, params.n_segments);
  const double step_x = static_cast<double>(w) / nx;
  const double step_y = static_cast<double>(h) / ny;
  const double step = std::sqrt(step_x * step_y);

  Rng rng(params.seed, 0x511C);
  std::vector<Center> centers;
  centers.reserve(static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      double cx = (i + 0.5) * step_x;
      double cy = (j + 0.5) * step_y;
      if (params.jitter > 0.0) {
        cx += rng.uniform(-params.jitter, params.jitter) * step_x;
        cy += rng.uniform(-params.jitter, params.jitter) * step_y;
      }
      const int px = std::clamp(static_cast<int>(cx), 0, w - 1);
      const int py = std::clamp(static_cast<int>(cy), 0, h - 1);
      const float* c = &lab[3 * (static_cast<std::size_t>(py) * w + px)];
      centers.push_back({c[0], c[1], c[2], cx, cy});
    }
  }
  const int k = static_cast<int>(centers.size());
  const double spatial_weight = (params.compactness * params.compactness) / (step * step);
  const int reach_x = static_cast<int>(std::ceil(step_x)) + 1;
  const int reach_y = static_cast<int>(std::ceil(step_y)) + 1;

  std::vector<int> assign(size.area(), -1);
  std::vector<double> best(size.area());
  auto distance = [&](const Center& c, int x, int y) {
    const float* p = &lab[3 * (static_cast<std::size_t>(y) * w + x)];
    const double dl = p[0] - c.l, da = p[1] - c.a, db = p[2] - c.b;
    const double dx = (x + 0.5) - c.x, dy = (y + 0.5) - c.y;
    return dl * dl + da * da + db * db + spatial_weight * (dx * dx + dy * dy);
  };

  for (int iter = 0; iter < params.iterations; ++iter) {
    std::fill(best.begin(), best.end(), std::numeric_limits<double>::infinity());
    std::fill(assign.begin(), assign.end(), -1);
    for (int ci = 0; ci < k; ++ci) {
      const Center& c = centers[ci];
      const int x0 = std::max(0, static_cast<int>(c.x) - reach_x);
      const int x1 = std::min(w - 1, static_cast<int>(c.x) + reach_x);
      const int y0 = std::max(0, static_cast<int>(c.y) - reach_y);
      const int y1 = std::min(h - 1, static_cast<int>(c.y) + reach_y);
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const std::size_t i = static_cast<std::size_t>(y) * w + x;
          const double d = distance(c, x, y);
          if (d < best[i]) {
            best[i] = d;
            assign[i] = ci;
          }
        }
      }
    }
    // Pixels outside every search window fall back to a global search.
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        if (assign[i] >= 0) continue;
        for (int ci = 0; ci < k; ++ci) {
          const double d = distance(centers[ci], x, y);
          if (d < best[i]) {
            best[i] = d;
            assign[i] = ci;
          }
        }
      }
    }
    std::vector<Center> sums(k, Center{0, 0, 0, 0, 0});
    std::vector<std::size_t> counts(k, 0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        Center& s = sums[assign[i]];
        s.l += lab[3 * i];
        s.a += lab[3 * i + 1];
        s.b += lab[3 * i + 2];
        s.x += x + 0.5;
        s.y += y + 0.5;
        ++counts[assign[i]];
      }
    }
    for (int ci = 0; ci < k; ++ci) {
      if (counts[ci] == 0) continue;
      const double n = static_cast<double>(counts[ci]);
      centers[ci] = {sums[ci].l / n, sums[ci].a / n, sums[ci].b / n, sums[ci].x / n, sums[ci].y / n};
    }
  }
  return enforce_connectivity(size, assign, k);
}

}  // namespace fcxl
