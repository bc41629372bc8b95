#include <gtest/gtest.h>

#include <array>
#include <limits>
#include <set>

#include "fcxl/mask_ops.hpp"
#include "fcxl/skeleton.hpp"
#include "support.hpp"

using namespace fcxl;
using namespace fcxl::testing;

namespace {

bool has_edge_for_test(const SkeletonGraph& g, int u, int v) {
  const auto e = std::minmax(u, v);
  return std::binary_search(g.edges.begin(), g.edges.end(), std::pair<int, int>{e.first, e.second});
}

bool has_2x2_block(const BinaryMask& m) {
  for (int y = 0; y + 1 < m.height(); ++y) {
    for (int x = 0; x + 1 < m.width(); ++x) {
      if (m(x, y) && m(x + 1, y) && m(x, y + 1) && m(x + 1, y + 1)) return true;
    }
  }
  return false;
}

}  // namespace

TEST(MedialAxis, DiskIsThinCenteredAndSmall) {
  const BinaryMask disk = ellipse_mask({21, 21}, 10, 10, 8, 8);
  const BinaryMask skel = medial_axis(disk);
  EXPECT_TRUE(skel.any());
  EXPECT_TRUE(subset_of(skel, disk));
  EXPECT_LE(static_cast<double>(skel.count()), 0.15 * static_cast<double>(disk.count()));
}

TEST(MedialAxis, BarBecomesItsCenterLine) {
  const BinaryMask bar = rect_mask({40, 11}, 3, 3, 37, 8);
  const BinaryMask skel = medial_axis(bar);
  EXPECT_TRUE(subset_of(skel, bar));
  int on_center = 0;
  for (int x = 0; x < 40; ++x) on_center += skel(x, 5);
  EXPECT_GE(on_center, 25);
  EXPECT_LE(skel.count(), static_cast<std::size_t>(on_center + 8));
}

TEST(MedialAxis, PropertiesOnRandomShapes) {
  Rng rng(41);
  for (int i = 0; i < 100; ++i) {
    const Size s{rng.uniform_int(4, 48), rng.uniform_int(4, 48)};
    const BinaryMask m = random_blobs(s, rng, 2, i % 4 == 0 ? 0.05 : 0.0);
    const BinaryMask skel = medial_axis(m);
    EXPECT_TRUE(subset_of(skel, m));
    EXPECT_EQ(medial_axis(skel), skel);
    EXPECT_FALSE(has_2x2_block(skel));
  }
  EXPECT_FALSE(medial_axis(BinaryMask({5, 5})).any());
}

TEST(RadiusGraph, EdgesMatchDefinition) {
  Rng rng(42);
  for (int i = 0; i < 30; ++i) {
    const BinaryMask m = random_noise({12, 12}, rng, 0.2);
    const SkeletonGraph g = build_radius_graph(m, 3.0);
    ASSERT_EQ(g.vertices.size(), m.count());
    for (std::size_t k = 1; k < g.vertices.size(); ++k) {
      const auto& a = g.vertices[k - 1];
      const auto& b = g.vertices[k];
      EXPECT_TRUE(a.y < b.y || (a.y == b.y && a.x < b.x));
    }
    std::size_t expected = 0;
    for (std::size_t u = 0; u < g.vertices.size(); ++u) {
      for (std::size_t v = u + 1; v < g.vertices.size(); ++v) {
        const double dx = g.vertices[u].x - g.vertices[v].x;
        const double dy = g.vertices[u].y - g.vertices[v].y;
        const bool want = std::sqrt(dx * dx + dy * dy) < 3.0;
        expected += want;
        EXPECT_EQ(has_edge_for_test(g, static_cast<int>(u), static_cast<int>(v)), want);
      }
    }
    EXPECT_EQ(g.edges.size(), expected);
  }
}

TEST(BreakCycles, SpanningForestKeepsComponents) {
  Rng rng(43);
  for (int i = 0; i < 30; ++i) {
    const SkeletonGraph g = build_radius_graph(random_noise({14, 14}, rng, 0.15), 3.0);
    const SkeletonGraph f = break_cycles(g);
    int gc = 0;
    int fc = 0;
    EXPECT_EQ(g.components(&gc), f.components(&fc));
    EXPECT_EQ(f.edges.size() + static_cast<std::size_t>(fc), f.vertices.size());
    for (const auto& [u, v] : f.edges) EXPECT_TRUE(has_edge_for_test(g, u, v));
  }
}

TEST(BreakCycles, RingBecomesOpenArc) {
  const BinaryMask ring = ellipse_mask({30, 30}, 15, 15, 12, 12) & ~ellipse_mask({30, 30}, 15, 15, 8, 8);
  const SkeletonGraph f = break_cycles(build_radius_graph(medial_axis(ring)));
  int comps = 0;
  f.components(&comps);
  EXPECT_EQ(comps, 1);
  EXPECT_EQ(f.edges.size() + 1, f.vertices.size());
}

TEST(LongestPath, MatchesAllPairsDiameterExactly) {
  Rng rng(44);
  int checked = 0;
  for (int i = 0; i < 60; ++i) {
    const Size s{rng.uniform_int(6, 40), rng.uniform_int(6, 40)};
    const BinaryMask skel = medial_axis(random_blobs(s, rng, 3));
    const SkeletonGraph f = break_cycles(build_radius_graph(skel));
    if (f.vertices.empty() || f.vertices.size() > 200) continue;
    ++checked;
    const GraphPath p = longest_path(f);
    ASSERT_FALSE(p.vertices.empty());
    ExactLength along{0, 0, 0};
    std::set<int> seen{p.vertices.front()};
    for (std::size_t k = 1; k < p.vertices.size(); ++k) {
      const int u = p.vertices[k - 1];
      const int v = p.vertices[k];
      ASSERT_TRUE(has_edge_for_test(f, u, v));
      EXPECT_TRUE(seen.insert(v).second) << "path revisits a vertex";
      along = exact_add(along, exact_edge(f.vertices[static_cast<std::size_t>(u)], f.vertices[static_cast<std::size_t>(v)]));
    }
    EXPECT_EQ(along, bf_diameter(f));
    EXPECT_NEAR(p.length, exact_value(along), 1e-9);
    EXPECT_LE(p.vertices.front(), p.vertices.back());
  }
  EXPECT_GE(checked, 40);
}

TEST(LongestPath, SingleVertexAndEmpty) {
  BinaryMask dot({3, 3});
  dot(1, 1) = 1;
  const GraphPath p = longest_path(break_cycles(build_radius_graph(dot)));
  EXPECT_EQ(p.vertices, std::vector<int>{0});
  EXPECT_EQ(p.length, 0.0);
  EXPECT_TRUE(longest_path(SkeletonGraph{}).vertices.empty());
}

TEST(Bezier, StaysNearControlPolygonAndHonoursSupport) {
  ScribblePath path{{{5, 5}, {20, 8}, {35, 20}}, 3};
  const Size s{40, 30};
  const BinaryMask r = rasterize_bezier(path, s);
  EXPECT_TRUE(r(5, 5));
  EXPECT_TRUE(r(35, 20));
  BinaryMask polyline(s);
  for (std::size_t k = 1; k < path.control_points.size(); ++k) {
    const auto a = path.control_points[k - 1];
    const auto b = path.control_points[k];
    for (int t = 0; t <= 100; ++t) {
      polyline.set({static_cast<int>(std::lround(a.x + (b.x - a.x) * t / 100.0)),
                    static_cast<int>(std::lround(a.y + (b.y - a.y) * t / 100.0))},
                   true);
    }
  }
  EXPECT_TRUE(subset_of(r, bf_dilate_disk(polyline, 4)));
  // Connected stroke.
  int pieces = 0;
  bf_components(r, true, &pieces);
  EXPECT_EQ(pieces, 1);
  const BinaryMask support = rect_mask(s, 0, 0, 20, 30);
  const BinaryMask clipped = rasterize_bezier(path, s, &support);
  EXPECT_TRUE(subset_of(clipped, r));
  EXPECT_FALSE(clipped(35, 20));
  EXPECT_EQ(rasterize_bezier(path, s), r);
}

TEST(Bezier, ValidationAndJson) {
  EXPECT_THROW((ScribblePath{{{1, 1}}, 3}.validate()), Error);
  EXPECT_THROW((ScribblePath{{{1, 1}, {2, 2}}, 0}.validate()), Error);
  EXPECT_THROW((ScribblePath{{{1, 1}, {2, 2}}, 16}.validate()), Error);
  const ScribblePath p{{{1, 2}, {3, 4}, {5, 6}}, 5};
  const ScribblePath back = scribble_path_from_json(to_json(p));
  EXPECT_EQ(back.control_points, p.control_points);
  EXPECT_EQ(back.thickness, 5);
}

TEST(StampDisk, MatchesEuclideanDefinition) {
  BinaryMask m({9, 9});
  stamp_disk(m, {1, 4}, 3);
  for (int y = 0; y < 9; ++y) {
    for (int x = 0; x < 9; ++x) EXPECT_EQ(m(x, y), (x - 1) * (x - 1) + (y - 4) * (y - 4) <= 9);
  }
}
