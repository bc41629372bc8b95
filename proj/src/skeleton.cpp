#include "fcxl/skeleton.hpp"

#include <array>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>

namespace fcxl {

namespace {

constexpr double kTieEps = 1e-9;

struct PointD {
  double x;
  double y;
};

bool thinning_pass(BinaryMask& m, bool first) {
  const int w = m.width();
  const int h = m.height();
  auto px = [&](int x, int y) -> int {
    return (x < 0 || y < 0 || x >= w || y >= h) ? 0 : m(x, y);
  };
  std::vector<Pixel> removed;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!m(x, y)) continue;
      // P2..P9 clockwise from north.
      const int p[8] = {px(x, y - 1),     px(x + 1, y - 1), px(x + 1, y), px(x + 1, y + 1),
                        px(x, y + 1),     px(x - 1, y + 1), px(x - 1, y), px(x - 1, y - 1)};
      const int b = p[0] + p[1] + p[2] + p[3] + p[4] + p[5] + p[6] + p[7];
      if (b < 2 || b > 6) continue;
      int a = 0;
      for (int i = 0; i < 8; ++i) a += (p[i] == 0 && p[(i + 1) % 8] == 1);
      if (a != 1) continue;
      const int n = p[0], e = p[2], s = p[4], wv = p[6];
      if (first ? (n * e * s != 0 || e * s * wv != 0) : (n * e * wv != 0 || n * s * wv != 0)) {
        continue;
      }
      removed.push_back({x, y});
    }
  }
  for (const auto& r : removed) m(r.x, r.y) = 0;
  return !removed.empty();
}

// Yokoi 8-connectivity number; deleting (x, y) preserves topology iff it is 1.
int connectivity_number(const BinaryMask& m, int x, int y) {
  // x1..x8 counter-clockwise from east; odd positions are edge neighbours.
  static constexpr int dx[8] = {1, 1, 0, -1, -1, -1, 0, 1};
  static constexpr int dy[8] = {0, -1, -1, -1, 0, 1, 1, 1};
  int q[8];
  for (int i = 0; i < 8; ++i) {
    const int nx = x + dx[i];
    const int ny = y + dy[i];
    q[i] = 1 - (nx >= 0 && ny >= 0 && nx < m.width() && ny < m.height() && m(nx, ny));
  }
  int n = 0;
  for (int k = 0; k < 8; k += 2) n += q[k] - q[k] * q[k + 1] * q[(k + 2) % 8];
  return n;
}

bool in_full_block(const BinaryMask& m, int x, int y) {
  for (int oy = -1; oy <= 0; ++oy) {
    for (int ox = -1; ox <= 0; ++ox) {
      const int x0 = x + ox;
      const int y0 = y + oy;
      if (x0 < 0 || y0 < 0 || x0 + 1 >= m.width() || y0 + 1 >= m.height()) continue;
      if (m(x0, y0) && m(x0 + 1, y0) && m(x0, y0 + 1) && m(x0 + 1, y0 + 1)) return true;
    }
  }
  return false;
}

int neighbour_count(const BinaryMask& m, int x, int y) {
  int n = 0;
  for (int oy = -1; oy <= 1; ++oy) {
    for (int ox = -1; ox <= 1; ++ox) {
      const int nx = x + ox;
      const int ny = y + oy;
      if ((ox || oy) && nx >= 0 && ny >= 0 && nx < m.width() && ny < m.height()) n += m(nx, ny);
    }
  }
  return n;
}

// Thinning can leave 2x2 blocks at staircases and junctions; remove simple,
// non-end pixels from them one at a time.
bool strip_blocks(BinaryMask& m) {
  bool changed = false;
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (m(x, y) && in_full_block(m, x, y) && neighbour_count(m, x, y) >= 2 &&
          connectivity_number(m, x, y) == 1) {
        m(x, y) = 0;
        changed = true;
      }
    }
  }
  return changed;
}

double dist(Pixel a, Pixel b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

BinaryMask medial_axis(const BinaryMask& m) {
  BinaryMask out = m;
  do {
    while (true) {
      const bool a = thinning_pass(out, true);
      const bool b = thinning_pass(out, false);
      if (!a && !b) break;
    }
  } while (strip_blocks(out));
  return out;
}

double SkeletonGraph::edge_length(std::size_t e) const {
  return dist(vertices[edges[e].first], vertices[edges[e].second]);
}

std::vector<std::vector<std::pair<int, double>>> SkeletonGraph::adjacency() const {
  std::vector<std::vector<std::pair<int, double>>> adj(vertices.size());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const double len = edge_length(e);
    adj[edges[e].first].push_back({edges[e].second, len});
    adj[edges[e].second].push_back({edges[e].first, len});
  }
  for (auto& list : adj) std::sort(list.begin(), list.end());
  return adj;
}

std::vector<int> SkeletonGraph::components(int* count) const {
  const auto adj = adjacency();
  std::vector<int> comp(vertices.size(), -1);
  int n = 0;
  std::vector<int> stack;
  for (std::size_t s = 0; s < vertices.size(); ++s) {
    if (comp[s] >= 0) continue;
    comp[s] = n;
    stack.assign(1, static_cast<int>(s));
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (const auto& [u, len] : adj[v]) {
        if (comp[u] < 0) {
          comp[u] = n;
          stack.push_back(u);
        }
      }
    }
    ++n;
  }
  if (count != nullptr) *count = n;
  return comp;
}

SkeletonGraph build_radius_graph(const BinaryMask& skel, double radius) {
  if (!(radius > 0.0)) throw Error("bad-radius", "graph radius must be positive");
  SkeletonGraph g;
  std::vector<int> index(skel.size().area(), -1);
  for (int y = 0; y < skel.height(); ++y) {
    for (int x = 0; x < skel.width(); ++x) {
      if (!skel(x, y)) continue;
      index[static_cast<std::size_t>(y) * skel.width() + x] = static_cast<int>(g.vertices.size());
      g.vertices.push_back({x, y});
    }
  }
  const int reach = static_cast<int>(std::ceil(radius));
  const double r2 = radius * radius;
  for (std::size_t v = 0; v < g.vertices.size(); ++v) {
    const Pixel p = g.vertices[v];
    for (int dy = 0; dy <= reach; ++dy) {
      for (int dx = -reach; dx <= reach; ++dx) {
        if (dy == 0 && dx <= 0) continue;
        if (dx * dx + dy * dy >= r2) continue;
        const int nx = p.x + dx;
        const int ny = p.y + dy;
        if (nx < 0 || ny < 0 || nx >= skel.width() || ny >= skel.height()) continue;
        const int u = index[static_cast<std::size_t>(ny) * skel.width() + nx];
        if (u >= 0) g.edges.push_back({static_cast<int>(v), u});
      }
    }
  }
  std::sort(g.edges.begin(), g.edges.end());
  return g;
}

SkeletonGraph break_cycles(const SkeletonGraph& g) {
  std::vector<std::size_t> order(g.edges.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> len(g.edges.size());
  for (std::size_t e = 0; e < g.edges.size(); ++e) len[e] = g.edge_length(e);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(len[a], g.edges[a]) < std::tie(len[b], g.edges[b]);
  });
  std::vector<int> parent(g.vertices.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  };
  SkeletonGraph out;
  out.vertices = g.vertices;
  for (auto e : order) {
    const int a = find(g.edges[e].first);
    const int b = find(g.edges[e].second);
    if (a == b) continue;
    parent[a] = b;
    out.edges.push_back(g.edges[e]);
  }
  std::sort(out.edges.begin(), out.edges.end());
  return out;
}

std::vector<double> tree_distances(const SkeletonGraph& forest, int source, std::vector<int>* parent) {
  const auto adj = forest.adjacency();
  std::vector<double> d(forest.vertices.size(), std::numeric_limits<double>::infinity());
  std::vector<int> par(forest.vertices.size(), -1);
  d[source] = 0.0;
  std::vector<int> stack{source};
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (const auto& [u, len] : adj[v]) {
      if (u == par[v] || !std::isinf(d[u])) continue;
      d[u] = d[v] + len;
      par[u] = v;
      stack.push_back(u);
    }
  }
  if (parent != nullptr) *parent = std::move(par);
  return d;
}

GraphPath longest_path(const SkeletonGraph& forest) {
  GraphPath best;
  if (forest.vertices.empty()) return best;
  int n_comp = 0;
  const auto comp = forest.components(&n_comp);

  auto farthest = [&](const std::vector<double>& d, int c) {
    int arg = -1;
    for (std::size_t v = 0; v < d.size(); ++v) {
      if (comp[v] != c) continue;
      if (arg < 0 || d[v] > d[arg] + kTieEps) arg = static_cast<int>(v);
    }
    return arg;
  };

  int best_u = -1, best_v = -1;
  double best_len = -1.0;
  std::vector<int> seen(n_comp, -1);
  for (std::size_t v = 0; v < forest.vertices.size(); ++v) {
    if (seen[comp[v]] < 0) seen[comp[v]] = static_cast<int>(v);
  }
  for (int c = 0; c < n_comp; ++c) {
    const int root = seen[c];
    const int a = farthest(tree_distances(forest, root), c);
    const auto da = tree_distances(forest, a);
    const int b = farthest(da, c);
    const double diameter = da[b];
    const auto db = tree_distances(forest, b);
    // Every diameter endpoint has eccentricity equal to the diameter, and
    // the eccentricity on a tree is attained at a or b.
    int u = -1;
    for (std::size_t v = 0; v < forest.vertices.size(); ++v) {
      if (comp[v] == c && std::max(da[v], db[v]) >= diameter - kTieEps) {
        u = static_cast<int>(v);
        break;
      }
    }
    const auto du = tree_distances(forest, u);
    int partner = u;
    for (std::size_t v = 0; v < forest.vertices.size(); ++v) {
      if (comp[v] == c && static_cast<int>(v) != u && du[v] >= diameter - kTieEps) {
        partner = static_cast<int>(v);
        break;
      }
    }
    const double len = du[partner];
    const bool longer = len > best_len + kTieEps;
    const bool tie = std::abs(len - best_len) <= kTieEps &&
                     std::pair(u, partner) < std::pair(best_u, best_v);
    if (best_u < 0 || longer || tie) {
      best_u = u;
      best_v = partner;
      best_len = len;
    }
  }
  std::vector<int> parent;
  tree_distances(forest, best_u, &parent);
  for (int v = best_v; v != -1; v = parent[v]) best.vertices.push_back(v);
  std::reverse(best.vertices.begin(), best.vertices.end());
  best.length = best_len;
  return best;
}

void ScribblePath::validate() const {
  if (control_points.size() < 2) throw Error("bad-scribble", "a scribble needs at least 2 points");
  if (thickness < 1 || thickness > 15) throw Error("bad-scribble", "thickness must be in [1, 15]");
}

nlohmann::json to_json(const ScribblePath& p) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& c : p.control_points) pts.push_back({c.x, c.y});
  return {{"points", pts}, {"thickness", p.thickness}};
}

ScribblePath scribble_path_from_json(const nlohmann::json& j) {
  ScribblePath p;
  try {
    for (const auto& pt : j.at("points")) p.control_points.push_back({pt.at(0).get<int>(), pt.at(1).get<int>()});
    p.thickness = j.value("thickness", 3);
  } catch (const nlohmann::json::exception& e) {
    throw Error("bad-scribble", e.what());
  }
  return p;
}

void stamp_disk(BinaryMask& m, Pixel center, int radius) {
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      if (dx * dx + dy * dy > radius * radius) continue;
      const Pixel p{center.x + dx, center.y + dy};
      if (m.size().contains(p)) m.set(p, true);
    }
  }
}

BinaryMask rasterize_bezier(const ScribblePath& path, Size bounds, const BinaryMask* support) {
  path.validate();
  if (support != nullptr) require_same_size(support->size(), bounds, "scribble support");
  const auto& pts = path.control_points;
  const std::size_t n = pts.size();
  const std::size_t k = std::max<std::size_t>(1, (n - 1 + 14) / 15);
  std::vector<PointD> ctrl;
  for (std::size_t i = 0; i < n - 1; i += k) ctrl.push_back({double(pts[i].x), double(pts[i].y)});
  ctrl.push_back({double(pts[n - 1].x), double(pts[n - 1].y)});

  BinaryMask out(bounds);
  const int radius = path.thickness / 2;
  auto stamp = [&](double x, double y) {
    const Pixel p{static_cast<int>(std::lround(x)), static_cast<int>(std::lround(y))};
    if (support != nullptr && (!support->size().contains(p) || !support->at(p))) return;
    stamp_disk(out, p, radius);
  };
  const std::size_t m = ctrl.size();
  for (std::size_t i = 0; i + 1 < m; ++i) {
    const PointD p0 = ctrl[i == 0 ? 0 : i - 1];
    const PointD p1 = ctrl[i];
    const PointD p2 = ctrl[i + 1];
    const PointD p3 = ctrl[std::min(i + 2, m - 1)];
    const PointD b0 = p1;
    const PointD b1{p1.x + (p2.x - p0.x) / 6.0, p1.y + (p2.y - p0.y) / 6.0};
    const PointD b2{p2.x - (p3.x - p1.x) / 6.0, p2.y - (p3.y - p1.y) / 6.0};
    const PointD b3 = p2;
    auto seg = [](PointD a, PointD b) { return std::hypot(b.x - a.x, b.y - a.y); };
    const double hull = seg(b0, b1) + seg(b1, b2) + seg(b2, b3);
    const int samples = std::max(4, static_cast<int>(std::ceil(4.0 * hull)));
    for (int s = 0; s <= samples; ++s) {
      const double t = static_cast<double>(s) / samples;
      const double u = 1.0 - t;
      const double c0 = u * u * u, c1 = 3 * u * u * t, c2 = 3 * u * t * t, c3 = t * t * t;
      stamp(c0 * b0.x + c1 * b1.x + c2 * b2.x + c3 * b3.x, c0 * b0.y + c1 * b1.y + c2 * b2.y + c3 * b3.y);
    }
  }
  return out;
}

}  // namespace fcxl
