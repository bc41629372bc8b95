#include "fcxl/mask_ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fcxl {

double iou(const BinaryMask& a, const BinaryMask& b) {
  require_same_size(a.size(), b.size(), "iou");
  std::size_t inter = 0;
  std::size_t uni = 0;
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) {
    inter += da[i] & db[i];
    uni += da[i] | db[i];
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

BinaryMask xor_diff(const BinaryMask& a, const BinaryMask& b) {
  require_same_size(a.size(), b.size(), "xor_diff");
  BinaryMask out(a.size());
  auto da = a.data();
  auto db = b.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < da.size(); ++i) dst[i] = da[i] ^ db[i];
  return out;
}

RegionLabeling connected_components(const BinaryMask& m, Connectivity conn) {
  const int w = m.width();
  const int h = m.height();
  RegionLabeling out{m.size(), std::vector<std::int32_t>(m.size().area(), 0), 0};
  std::vector<int> queue;
  queue.reserve(m.size().area());
  const bool eight = conn == Connectivity::eight;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t start = static_cast<std::size_t>(y) * w + x;
      if (!m(x, y) || out.labels[start] != 0) continue;
      const int label = ++out.region_count;
      out.labels[start] = label;
      queue.clear();
      queue.push_back(static_cast<int>(start));
      for (std::size_t head = 0; head < queue.size(); ++head) {
        const int cx = queue[head] % w;
        const int cy = queue[head] / w;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            if (!eight && dx != 0 && dy != 0) continue;
            const int nx = cx + dx;
            const int ny = cy + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            const std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
            if (m(nx, ny) && out.labels[ni] == 0) {
              out.labels[ni] = label;
              queue.push_back(static_cast<int>(ni));
            }
          }
        }
      }
    }
  }
  return out;
}

BinaryMask largest_component(const BinaryMask& m, Connectivity conn,
                             std::optional<Pixel> anchor) {
  const RegionLabeling cc = connected_components(m, conn);
  if (cc.region_count == 0) return BinaryMask(m.size());

  int chosen = 0;
  if (anchor && m.size().contains(*anchor) && m.at(*anchor)) {
    chosen = cc(anchor->x, anchor->y);
  } else if (anchor) {
    std::vector<std::int64_t> best(static_cast<std::size_t>(cc.region_count) + 1,
                                   std::numeric_limits<std::int64_t>::max());
    for (int y = 0; y < m.height(); ++y) {
      for (int x = 0; x < m.width(); ++x) {
        const int l = cc(x, y);
        if (l == 0) continue;
        const std::int64_t dx = x - anchor->x;
        const std::int64_t dy = y - anchor->y;
        best[l] = std::min(best[l], dx * dx + dy * dy);
      }
    }
    chosen = 1;
    for (int l = 2; l <= cc.region_count; ++l) {
      if (best[l] < best[chosen]) chosen = l;
    }
  } else {
    const auto areas = cc.areas();
    chosen = 1;
    for (int l = 2; l <= cc.region_count; ++l) {
      if (areas[l] > areas[chosen]) chosen = l;
    }
  }
  return cc.region(chosen);
}

int Kernel::half_width(int dy) const {
  if (shape == Shape::rect) return std::abs(dy) <= ry ? rx : -1;
  const int r2 = rx * rx - dy * dy;
  if (r2 < 0) return -1;
  int w = static_cast<int>(std::sqrt(static_cast<double>(r2)));
  while (w * w > r2) --w;
  while ((w + 1) * (w + 1) <= r2) ++w;
  return w;
}

BinaryMask morphology(const BinaryMask& m, MorphOp op, const Kernel& k) {
  if (k.rx < 0 || k.ry < 0) throw Error("bad-kernel", "kernel extents must be non-negative");
  const int w = m.width();
  const int h = m.height();
  const int reach = k.shape == Kernel::Shape::rect ? k.ry : k.rx;

  // Prefix sums of each row: prefix[y*(w+1) + x] = ones in row y before x.
  std::vector<int> prefix(static_cast<std::size_t>(h) * (w + 1), 0);
  for (int y = 0; y < h; ++y) {
    int* row = &prefix[static_cast<std::size_t>(y) * (w + 1)];
    for (int x = 0; x < w; ++x) row[x + 1] = row[x] + m(x, y);
  }
  auto ones = [&](int y, int lo, int hi) {  // inclusive [lo, hi], clamped
    lo = std::max(lo, 0);
    hi = std::min(hi, w - 1);
    if (lo > hi) return 0;
    const int* row = &prefix[static_cast<std::size_t>(y) * (w + 1)];
    return row[hi + 1] - row[lo];
  };

  BinaryMask out(m.size(), op == MorphOp::erode ? 1 : 0);
  for (int dy = -reach; dy <= reach; ++dy) {
    const int hw = k.half_width(dy);
    if (hw < 0) continue;
    for (int y = 0; y < h; ++y) {
      const int sy = y + dy;
      const bool row_in = sy >= 0 && sy < h;
      for (int x = 0; x < w; ++x) {
        if (op == MorphOp::dilate) {
          if (!out(x, y) && row_in && ones(sy, x - hw, x + hw) > 0) out(x, y) = 1;
        } else if (out(x, y)) {
          const bool inside = row_in && x - hw >= 0 && x + hw < w;
          if (!inside || ones(sy, x - hw, x + hw) != 2 * hw + 1) out(x, y) = 0;
        }
      }
    }
  }
  return out;
}

BinaryMask boundary_band(const BinaryMask& m, int width) {
  const Kernel k = Kernel::disk(width);
  return dilate(m, k) & ~erode(m, k);
}

std::vector<std::int64_t> squared_distance_transform(const BinaryMask& m) {
  const int w = m.width();
  const int h = m.height();
  std::vector<std::int64_t> col(m.size().area());

  // Vertical pass: distance to the nearest background pixel in the same
  // column, rows -1 and h being background.
  for (int x = 0; x < w; ++x) {
    std::int64_t run = 0;
    for (int y = 0; y < h; ++y) {
      run = m(x, y) ? run + 1 : 0;
      col[static_cast<std::size_t>(y) * w + x] = run;
    }
    run = 0;
    for (int y = h - 1; y >= 0; --y) {
      run = m(x, y) ? run + 1 : 0;
      auto& v = col[static_cast<std::size_t>(y) * w + x];
      v = std::min(v, run);
    }
  }

  // Horizontal pass: lower envelope of parabolas over q in [-1, w], where the
  // two padding columns are background (f = 0).
  const int n = w + 2;
  std::vector<std::int64_t> f(n);
  std::vector<int> v(n);
  std::vector<double> z(n + 1);
  std::vector<std::int64_t> out(m.size().area());
  for (int y = 0; y < h; ++y) {
    f[0] = 0;
    f[n - 1] = 0;
    for (int x = 0; x < w; ++x) {
      const std::int64_t d = col[static_cast<std::size_t>(y) * w + x];
      f[x + 1] = d * d;
    }
    int k = 0;
    v[0] = 0;
    z[0] = -std::numeric_limits<double>::infinity();
    z[1] = std::numeric_limits<double>::infinity();
    auto intersect = [&](int q, int p) {
      return (static_cast<double>(f[q] + static_cast<std::int64_t>(q) * q) -
              static_cast<double>(f[p] + static_cast<std::int64_t>(p) * p)) /
             (2.0 * (q - p));
    };
    for (int q = 1; q < n; ++q) {
      double s = intersect(q, v[k]);
      while (s <= z[k]) {
        --k;
        s = intersect(q, v[k]);
      }
      ++k;
      v[k] = q;
      z[k] = s;
      z[k + 1] = std::numeric_limits<double>::infinity();
    }
    k = 0;
    for (int q = 1; q <= w; ++q) {
      while (z[k + 1] < q) ++k;
      const std::int64_t dq = q - v[k];
      const std::size_t idx = static_cast<std::size_t>(y) * w + (q - 1);
      out[idx] = m(q - 1, y) ? dq * dq + f[v[k]] : 0;
    }
  }
  return out;
}

ScoreMap distance_transform(const BinaryMask& m) {
  const auto sq = squared_distance_transform(m);
  std::vector<float> data(sq.size());
  for (std::size_t i = 0; i < sq.size(); ++i) {
    data[i] = static_cast<float>(std::sqrt(static_cast<double>(sq[i])));
  }
  return ScoreMap(m.size(), std::move(data));
}

std::optional<Pixel> deepest_pixel(const BinaryMask& m) {
  const auto sq = squared_distance_transform(m);
  std::int64_t best = 0;
  std::optional<Pixel> out;
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      const auto d = sq[static_cast<std::size_t>(y) * m.width() + x];
      if (d > best) {
        best = d;
        out = Pixel{x, y};
      }
    }
  }
  return out;
}

namespace {

int nearest_source(int dst, int in, int out) {
  const std::int64_t s = (static_cast<std::int64_t>(2 * dst + 1) * in) / (2 * static_cast<std::int64_t>(out));
  return static_cast<int>(std::min<std::int64_t>(s, in - 1));
}

struct Tap {
  int i0;
  int i1;
  double w1;
};

std::vector<Tap> bilinear_taps(int in, int out) {
  std::vector<Tap> taps(out);
  const double scale = static_cast<double>(in) / out;
  for (int d = 0; d < out; ++d) {
    double s = (d + 0.5) * scale - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(in - 1));
    const int i0 = static_cast<int>(std::floor(s));
    const int i1 = std::min(i0 + 1, in - 1);
    taps[d] = {i0, i1, s - i0};
  }
  return taps;
}

}  // namespace

BinaryMask resize(const BinaryMask& m, Size target, Interp mode) {
  if (mode != Interp::nearest) {
    throw Error("bilinear-on-binary", "binary masks can only be resized with nearest sampling");
  }
  if (target == m.size()) return m;
  BinaryMask out(target);
  std::vector<int> xs(target.width);
  for (int x = 0; x < target.width; ++x) xs[x] = nearest_source(x, m.width(), target.width);
  for (int y = 0; y < target.height; ++y) {
    const int sy = nearest_source(y, m.height(), target.height);
    for (int x = 0; x < target.width; ++x) out(x, y) = m(xs[x], sy);
  }
  return out;
}

ScoreMap resize(const ScoreMap& m, Size target, Interp mode) {
  if (target == m.size()) return m;
  ScoreMap out(target);
  if (mode == Interp::nearest) {
    std::vector<int> xs(target.width);
    for (int x = 0; x < target.width; ++x) xs[x] = nearest_source(x, m.width(), target.width);
    for (int y = 0; y < target.height; ++y) {
      const int sy = nearest_source(y, m.height(), target.height);
      for (int x = 0; x < target.width; ++x) out(x, y) = m(xs[x], sy);
    }
    return out;
  }
  const auto tx = bilinear_taps(m.width(), target.width);
  const auto ty = bilinear_taps(m.height(), target.height);
  for (int y = 0; y < target.height; ++y) {
    const Tap& a = ty[y];
    for (int x = 0; x < target.width; ++x) {
      const Tap& b = tx[x];
      const double top = (1.0 - b.w1) * m(b.i0, a.i0) + b.w1 * m(b.i1, a.i0);
      const double bot = (1.0 - b.w1) * m(b.i0, a.i1) + b.w1 * m(b.i1, a.i1);
      out(x, y) = static_cast<float>((1.0 - a.w1) * top + a.w1 * bot);
    }
  }
  return out;
}

BinaryMask threshold_logits(const ScoreMap& logits) {
  BinaryMask out(logits.size());
  auto src = logits.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > 0.0f ? 1 : 0;
  return out;
}

ScoreMap mask_to_logits(const BinaryMask& m, float magnitude) {
  ScoreMap out(m.size());
  auto src = m.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] ? magnitude : -magnitude;
  return out;
}

}  // namespace fcxl
