#pragma once

// Fixture builders and brute-force reference implementations shared by the
// unit and acceptance tests. The references are deliberately naive so they
// can be trusted by inspection.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fcxl/dataset.hpp"
#include "fcxl/error.hpp"
#include "fcxl/image.hpp"
#include "fcxl/image_io.hpp"
#include "fcxl/mask.hpp"
#include "fcxl/random.hpp"
#include "fcxl/skeleton.hpp"

// Asserts that `stmt` throws fcxl::Error with the given code.
#define EXPECT_ERROR_CODE(stmt, expected)                   \
  do {                                                      \
    try {                                                   \
      stmt;                                                 \
      ADD_FAILURE() << "no exception, wanted " << expected; \
    } catch (const ::fcxl::Error& e_) {                     \
      EXPECT_EQ(e_.code(), expected);                       \
    }                                                       \
  } while (0)

namespace fcxl::testing {

inline BinaryMask ellipse_mask(Size s, double cx, double cy, double rx, double ry) {
  BinaryMask m(s);
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      const double dx = (x - cx) / rx;
      const double dy = (y - cy) / ry;
      m(x, y) = dx * dx + dy * dy <= 1.0;
    }
  }
  return m;
}

inline BinaryMask rect_mask(Size s, int x0, int y0, int x1, int y1) {
  BinaryMask m(s);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) m(x, y) = 1;
  }
  return m;
}

/// Union of a few random ellipses and rectangles, optionally speckled.
inline BinaryMask random_blobs(Size s, Rng& rng, int blobs, double speckle = 0.0) {
  BinaryMask m(s);
  for (int b = 0; b < blobs; ++b) {
    const double cx = rng.uniform(0, s.width);
    const double cy = rng.uniform(0, s.height);
    const double rx = rng.uniform(1.0, std::max(2.0, s.width / 3.0));
    const double ry = rng.uniform(1.0, std::max(2.0, s.height / 3.0));
    const bool ellipse = rng.bernoulli(0.5);
    for (int y = 0; y < s.height; ++y) {
      for (int x = 0; x < s.width; ++x) {
        const double dx = (x - cx) / rx;
        const double dy = (y - cy) / ry;
        if (ellipse ? dx * dx + dy * dy <= 1.0 : (std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0)) m(x, y) = 1;
      }
    }
  }
  if (speckle > 0.0) {
    for (auto& v : m.data()) {
      if (rng.bernoulli(speckle)) v ^= 1;
    }
  }
  return m;
}

inline BinaryMask random_noise(Size s, Rng& rng, double p) {
  BinaryMask m(s);
  for (auto& v : m.data()) v = rng.bernoulli(p);
  return m;
}

/// Two-tone image: `fg` color inside the mask, `bg` outside, plus small
/// deterministic noise.
inline RgbImage two_tone(const BinaryMask& m, std::array<std::uint8_t, 3> fg, std::array<std::uint8_t, 3> bg,
                         Rng* noise = nullptr, int amplitude = 0) {
  RgbImage img(m.size());
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      auto c = m(x, y) ? fg : bg;
      if (noise != nullptr && amplitude > 0) {
        for (auto& ch : c) ch = static_cast<std::uint8_t>(std::clamp(ch + noise->uniform_int(-amplitude, amplitude), 0, 255));
      }
      img.set(x, y, c);
    }
  }
  return img;
}

inline RgbImage random_image(Size s, Rng& rng) {
  RgbImage img(s);
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      img.set(x, y, {static_cast<std::uint8_t>(rng.below(256)), static_cast<std::uint8_t>(rng.below(256)),
                     static_cast<std::uint8_t>(rng.below(256))});
    }
  }
  return img;
}

/// Smooth random image: a few colored blobs over a gradient.
inline RgbImage blob_image(Size s, Rng& rng) {
  RgbImage img(s);
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      img.set(x, y, {static_cast<std::uint8_t>(x * 255 / std::max(1, s.width - 1)),
                     static_cast<std::uint8_t>(y * 255 / std::max(1, s.height - 1)), 90});
    }
  }
  for (int b = 0; b < 5; ++b) {
    const BinaryMask m = random_blobs(s, rng, 1);
    const std::array<std::uint8_t, 3> c{static_cast<std::uint8_t>(rng.below(256)),
                                        static_cast<std::uint8_t>(rng.below(256)),
                                        static_cast<std::uint8_t>(rng.below(256))};
    for (int y = 0; y < s.height; ++y) {
      for (int x = 0; x < s.width; ++x) {
        if (m(x, y)) img.set(x, y, c);
      }
    }
  }
  return img;
}

// --- brute-force references ---------------------------------------------------

/// Squared distance from every foreground pixel to the nearest background
/// pixel, where the ring of pixels just outside the frame counts as
/// background. O(N^2).
inline std::vector<std::int64_t> bf_squared_distance(const BinaryMask& m) {
  const int w = m.width();
  const int h = m.height();
  std::vector<Pixel> bg;
  for (int y = -1; y <= h; ++y) {
    for (int x = -1; x <= w; ++x) {
      const bool outside = x < 0 || y < 0 || x >= w || y >= h;
      if (outside || !m(x, y)) bg.push_back({x, y});
    }
  }
  std::vector<std::int64_t> out(m.size().area(), 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!m(x, y)) continue;
      std::int64_t best = std::numeric_limits<std::int64_t>::max();
      for (const auto& b : bg) {
        const std::int64_t dx = x - b.x;
        const std::int64_t dy = y - b.y;
        best = std::min(best, dx * dx + dy * dy);
      }
      out[static_cast<std::size_t>(y) * w + x] = best;
    }
  }
  return out;
}

inline std::optional<Pixel> bf_deepest(const BinaryMask& m) {
  const auto d = bf_squared_distance(m);
  std::optional<Pixel> best;
  std::int64_t best_d = 0;
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      const auto v = d[static_cast<std::size_t>(y) * m.width() + x];
      if (m(x, y) && (!best || v > best_d)) {
        best = Pixel{x, y};
        best_d = v;
      }
    }
  }
  return best;
}

/// Recursive-free flood fill labelling with explicit stack; labels in
/// row-major order of first pixel.
inline std::vector<int> bf_components(const BinaryMask& m, bool eight, int* count = nullptr) {
  const int w = m.width();
  const int h = m.height();
  std::vector<int> label(m.size().area(), 0);
  int next = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!m(x, y) || label[static_cast<std::size_t>(y) * w + x]) continue;
      ++next;
      std::vector<Pixel> stack{{x, y}};
      label[static_cast<std::size_t>(y) * w + x] = next;
      while (!stack.empty()) {
        const Pixel p = stack.back();
        stack.pop_back();
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if ((dx == 0 && dy == 0) || (!eight && dx != 0 && dy != 0)) continue;
            const int nx = p.x + dx;
            const int ny = p.y + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h || !m(nx, ny)) continue;
            auto& l = label[static_cast<std::size_t>(ny) * w + nx];
            if (l == 0) {
              l = next;
              stack.push_back({nx, ny});
            }
          }
        }
      }
    }
  }
  if (count != nullptr) *count = next;
  return label;
}

/// Largest 8-connected component by area, ties to the lowest label.
inline BinaryMask bf_largest(const BinaryMask& m) {
  int count = 0;
  const auto label = bf_components(m, true, &count);
  std::vector<std::size_t> area(static_cast<std::size_t>(count) + 1, 0);
  for (int l : label) ++area[static_cast<std::size_t>(l)];
  int best = 0;
  for (int l = 1; l <= count; ++l) {
    if (best == 0 || area[static_cast<std::size_t>(l)] > area[static_cast<std::size_t>(best)]) best = l;
  }
  BinaryMask out(m.size());
  for (std::size_t i = 0; i < label.size(); ++i) out.data()[i] = best != 0 && label[i] == best;
  return out;
}

/// Component selected by an anchor: the one holding it, else the nearest one
/// (squared distance, ties to the lowest label).
inline BinaryMask bf_anchored(const BinaryMask& m, Pixel anchor) {
  int count = 0;
  const auto label = bf_components(m, true, &count);
  if (count == 0) return BinaryMask(m.size());
  int pick = label[static_cast<std::size_t>(anchor.y) * m.width() + anchor.x];
  if (pick == 0) {
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    for (int y = 0; y < m.height(); ++y) {
      for (int x = 0; x < m.width(); ++x) {
        const int l = label[static_cast<std::size_t>(y) * m.width() + x];
        if (l == 0) continue;
        const std::int64_t dx = x - anchor.x;
        const std::int64_t dy = y - anchor.y;
        const std::int64_t d = dx * dx + dy * dy;
        if (d < best || (d == best && l < pick)) {
          best = d;
          pick = l;
        }
      }
    }
  }
  BinaryMask out(m.size());
  for (std::size_t i = 0; i < label.size(); ++i) out.data()[i] = label[i] == pick;
  return out;
}

/// Dilation by a Euclidean disk via direct neighbourhood scan.
inline BinaryMask bf_dilate_disk(const BinaryMask& m, int r) {
  BinaryMask out(m.size());
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      for (int dy = -r; dy <= r && !out(x, y); ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          if (dx * dx + dy * dy > r * r) continue;
          const int nx = x + dx;
          const int ny = y + dy;
          if (nx >= 0 && ny >= 0 && nx < m.width() && ny < m.height() && m(nx, ny)) {
            out(x, y) = 1;
            break;
          }
        }
      }
    }
  }
  return out;
}

inline bool subset_of(const BinaryMask& a, const BinaryMask& b) {
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    if (a.data()[i] && !b.data()[i]) return false;
  }
  return true;
}

// --- exact skeleton-graph lengths ----------------------------------------------

// Radius-3 edges have squared lengths 1, 2, 4, 5 or 8, so every path length
// is a + b*sqrt2 + c*sqrt5 with integer coefficients. Comparing coefficient
// triples is exact.
using ExactLength = std::array<long, 3>;

inline ExactLength exact_edge(Pixel a, Pixel b) {
  const int d2 = (a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y);
  switch (d2) {
    case 1: return {1, 0, 0};
    case 2: return {0, 1, 0};
    case 4: return {2, 0, 0};
    case 5: return {0, 0, 1};
    case 8: return {0, 2, 0};
    default: throw std::logic_error("unexpected squared edge length " + std::to_string(d2));
  }
}

inline double exact_value(const ExactLength& e) {
  return static_cast<double>(e[0]) + static_cast<double>(e[1]) * std::sqrt(2.0) +
         static_cast<double>(e[2]) * std::sqrt(5.0);
}

inline ExactLength exact_add(ExactLength a, const ExactLength& b) {
  for (std::size_t i = 0; i < 3; ++i) a[i] += b[i];
  return a;
}

/// Largest path length over all vertex pairs of a forest, by a traversal
/// from every vertex.
inline ExactLength bf_diameter(const SkeletonGraph& g) {
  const std::size_t n = g.vertices.size();
  std::vector<std::vector<int>> adj(n);
  for (const auto& [u, v] : g.edges) {
    adj[static_cast<std::size_t>(u)].push_back(v);
    adj[static_cast<std::size_t>(v)].push_back(u);
  }
  ExactLength best{0, 0, 0};
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<std::optional<ExactLength>> dist(n);
    dist[s] = ExactLength{0, 0, 0};
    std::vector<std::size_t> stack{s};
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (int vi : adj[u]) {
        const auto v = static_cast<std::size_t>(vi);
        if (dist[v]) continue;
        dist[v] = exact_add(*dist[u], exact_edge(g.vertices[u], g.vertices[v]));
        stack.push_back(v);
      }
    }
    for (const auto& d : dist) {
      if (d && exact_value(*d) > exact_value(best)) best = *d;
    }
  }
  return best;
}

/// Exact length of a vertex sequence; nullopt when a step is not an edge.
inline std::optional<ExactLength> exact_path_length(const SkeletonGraph& g, const std::vector<int>& path) {
  ExactLength total{0, 0, 0};
  for (std::size_t k = 1; k < path.size(); ++k) {
    const auto e = std::minmax(path[k - 1], path[k]);
    if (!std::binary_search(g.edges.begin(), g.edges.end(), std::pair<int, int>{e.first, e.second})) {
      return std::nullopt;
    }
    total = exact_add(total, exact_edge(g.vertices[static_cast<std::size_t>(path[k - 1])],
                                        g.vertices[static_cast<std::size_t>(path[k])]));
  }
  return total;
}

// --- on-disk datasets -----------------------------------------------------------

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("fcxl_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

struct FixtureSample {
  std::string id;
  RgbImage image;
  BinaryMask gt;
  std::optional<BinaryMask> initial;
};

inline void write_dataset(const std::filesystem::path& root, const std::vector<FixtureSample>& samples) {
  std::filesystem::create_directories(root / "images");
  std::filesystem::create_directories(root / "masks");
  std::vector<DatasetRecord> records;
  for (const auto& s : samples) {
    DatasetRecord r{s.id, "images/" + s.id + ".png", "masks/" + s.id + ".png", std::nullopt};
    std::filesystem::create_directories((root / r.image).parent_path());
    std::filesystem::create_directories((root / r.mask).parent_path());
    save_image(root / r.image, s.image);
    save_mask(root / r.mask, s.gt);
    if (s.initial) {
      r.initial_mask = "initial_masks/" + s.id + ".png";
      std::filesystem::create_directories((root / *r.initial_mask).parent_path());
      save_mask(root / *r.initial_mask, *s.initial);
    }
    records.push_back(std::move(r));
  }
  write_index(root, records);
}

/// Two-tone ellipse and rectangle scenes of size 64x64; deterministic per
/// index.
inline FixtureSample two_tone_fixture(int index) {
  Rng rng(1000 + static_cast<std::uint64_t>(index));
  const Size s{64, 64};
  const double cx = rng.uniform(24, 40);
  const double cy = rng.uniform(24, 40);
  const double rx = rng.uniform(8, 18);
  const double ry = rng.uniform(8, 18);
  const BinaryMask gt =
      index % 2 ? ellipse_mask(s, cx, cy, rx, ry)
                : rect_mask(s, static_cast<int>(cx - rx), static_cast<int>(cy - ry), static_cast<int>(cx + rx),
                            static_cast<int>(cy + ry));
  const std::array<std::uint8_t, 3> fg{static_cast<std::uint8_t>(rng.uniform_int(150, 255)),
                                       static_cast<std::uint8_t>(rng.uniform_int(0, 255)),
                                       static_cast<std::uint8_t>(rng.uniform_int(0, 100))};
  const std::array<std::uint8_t, 3> bg{static_cast<std::uint8_t>(rng.uniform_int(0, 80)),
                                       static_cast<std::uint8_t>(rng.uniform_int(0, 255)),
                                       static_cast<std::uint8_t>(rng.uniform_int(100, 255))};
  char id[16];
  std::snprintf(id, sizeof(id), "tt%02d", index);
  return {id, two_tone(gt, fg, bg), gt, std::nullopt};
}

}  // namespace fcxl::testing
