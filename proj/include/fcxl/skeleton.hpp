#pragma once

#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "fcxl/mask.hpp"

namespace fcxl {

/// Zhang-Suen thinning to convergence: a 1-pixel-wide subset of m.
BinaryMask medial_axis(const BinaryMask& m);

struct SkeletonGraph {
  std::vector<Pixel> vertices;
  std::vector<std::pair<int, int>> edges;  // u < v, sorted, unique

  double edge_length(std::size_t e) const;
  /// Per vertex: (neighbour, edge length), neighbours in ascending order.
  std::vector<std::vector<std::pair<int, double>>> adjacency() const;
  /// Component id per vertex, numbered by lowest member vertex.
  std::vector<int> components(int* count = nullptr) const;
};

/// Vertices are the skeleton pixels in row-major order; (u, v) is an edge
/// iff 0 < |u - v| < radius.
SkeletonGraph build_radius_graph(const BinaryMask& skel, double radius = 3.0);

/// Minimum spanning forest by Euclidean edge length (Kruskal, ties by
/// endpoint indices): drops the longest edge of every cycle.
SkeletonGraph break_cycles(const SkeletonGraph& g);

struct GraphPath {
  std::vector<int> vertices;
  double length = 0.0;  // summed from vertices.front()
};

/// Weighted diameter of a forest via double sweep, taken over all components.
/// Ties go to the lexicographically smallest endpoint pair; the path starts
/// at the smaller endpoint.
GraphPath longest_path(const SkeletonGraph& forest);

/// Single-source distances on a forest, summed outward from source
/// (infinity for other components).
std::vector<double> tree_distances(const SkeletonGraph& forest, int source,
                                   std::vector<int>* parent = nullptr);

struct ScribblePath {
  std::vector<Pixel> control_points;
  int thickness = 3;

  void validate() const;
};

nlohmann::json to_json(const ScribblePath& p);
ScribblePath scribble_path_from_json(const nlohmann::json& j);

/// Composite cubic Bezier (Catmull-Rom through at most 16 subsampled points),
/// sampled at >= 4 points per pixel of arc length and stamped with a disk of
/// radius thickness/2. Samples landing outside `support` (when given) are
/// skipped.
BinaryMask rasterize_bezier(const ScribblePath& path, Size bounds,
                            const BinaryMask* support = nullptr);

/// Stamps a Euclidean disk (dx^2 + dy^2 <= r^2) clipped to the mask bounds.
void stamp_disk(BinaryMask& m, Pixel center, int radius);

}  // namespace fcxl
