#include "soapbubble/intrinsic.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>

namespace soapbubble {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using QueueItem = std::pair<double, std::size_t>;
using MinQueue = std::priority_queue<QueueItem, std::vector<QueueItem>, std::greater<>>;

}  // namespace

GeodesicGraph::GeodesicGraph(const Surface& surface, std::size_t node_budget, int k, std::uint64_t seed) : k_(k) {
  if (node_budget < 100) throw InputError("geodesic graph needs at least 100 nodes");
  if (k < 6) throw InputError("geodesic graph needs k >= 6");
  SampleSet set = surface.sample(node_budget, seed);
  nodes_ = std::move(set.samples);
  weights_ = std::move(set.weights);
  build();
  if (surface.as_analytic() && component_count_ > 1)
    throw NumericalError("geodesic graph", "graph over a connected surface is disconnected; raise k");
}

GeodesicGraph::GeodesicGraph(std::vector<SurfaceSample> nodes, int k, bool require_connected)
    : nodes_(std::move(nodes)), k_(k) {
  if (nodes_.size() < 2) throw InputError("geodesic graph needs at least 2 nodes");
  if (k < 1) throw InputError("geodesic graph needs k >= 1");
  build();
  if (require_connected && component_count_ > 1)
    throw NumericalError("geodesic graph", "graph is disconnected; raise k");
}

void GeodesicGraph::build() {
  positions_.clear();
  positions_.reserve(nodes_.size());
  for (const auto& s : nodes_) positions_.push_back(s.point);
  index_ = KdTree(positions_);
  const std::size_t n = nodes_.size();
  std::vector<std::vector<std::size_t>> knn(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& nb : index_.nearest(positions_[i], static_cast<std::size_t>(k_) + 1)) {
      if (nb.index != i) knn[i].push_back(nb.index);
    }
  }
  adjacency_.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j : knn[i]) {
      adjacency_[i].push_back({j, 0.0});
      adjacency_[j].push_back({i, 0.0});
    }
  }
  double total = 0.0;
  std::size_t count = 0;
  max_edge_ = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto& adj = adjacency_[i];
    std::sort(adj.begin(), adj.end(), [](const GraphEdge& a, const GraphEdge& b) { return a.to < b.to; });
    adj.erase(std::unique(adj.begin(), adj.end(), [](const GraphEdge& a, const GraphEdge& b) { return a.to == b.to; }),
              adj.end());
    for (auto& e : adj) {
      e.weight = (positions_[i] - positions_[e.to]).norm();
      total += e.weight;
      ++count;
      max_edge_ = std::max(max_edge_, e.weight);
    }
  }
  mean_edge_ = count ? total / static_cast<double>(count) : 0.0;
  component_ = components_of(std::vector<char>(n, 1), &component_count_);
}

std::size_t GeodesicGraph::nearest_node(const Vec& x) const { return index_.nearest(x, 1).front().index; }

DistanceField GeodesicGraph::distances(const std::vector<std::pair<std::size_t, double>>& sources,
                                       const std::vector<char>& mask, double stop_at, std::size_t target) const {
  const std::size_t n = nodes_.size();
  DistanceField f;
  f.distance.assign(n, kInf);
  f.predecessor.assign(n, DistanceField::npos);
  MinQueue queue;
  for (const auto& [node, offset] : sources) {
    if (!mask.empty() && !mask[node]) continue;
    if (offset < f.distance[node]) {
      f.distance[node] = offset;
      queue.push({offset, node});
    }
  }
  while (!queue.empty()) {
    const auto [d, u] = queue.top();
    queue.pop();
    if (d > f.distance[u]) continue;
    if (u == target || d > stop_at) break;
    for (const auto& e : adjacency_[u]) {
      if (!mask.empty() && !mask[e.to]) continue;
      const double nd = d + e.weight;
      if (nd < f.distance[e.to]) {
        f.distance[e.to] = nd;
        f.predecessor[e.to] = u;
        queue.push({nd, e.to});
      }
    }
  }
  return f;
}

std::vector<std::size_t> GeodesicGraph::shortest_path(std::size_t p, std::size_t q) const {
  if (p >= size() || q >= size()) throw InputError("node index out of range");
  const DistanceField f = distances({{p, 0.0}}, {}, kInf, q);
  if (!std::isfinite(f.distance[q])) return {};
  std::vector<std::size_t> path;
  for (std::size_t v = q; v != DistanceField::npos; v = f.predecessor[v]) path.push_back(v);
  std::reverse(path.begin(), path.end());
  return path;
}

std::vector<int> GeodesicGraph::components_of(const std::vector<char>& mask, std::size_t* count) const {
  std::vector<int> label(nodes_.size(), -1);
  int next = 0;
  std::vector<std::size_t> stack;
  for (std::size_t s = 0; s < nodes_.size(); ++s) {
    if (!mask[s] || label[s] >= 0) continue;
    label[s] = next;
    stack.push_back(s);
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (const auto& e : adjacency_[u]) {
        if (mask[e.to] && label[e.to] < 0) {
          label[e.to] = next;
          stack.push_back(e.to);
        }
      }
    }
    ++next;
  }
  if (count) *count = static_cast<std::size_t>(next);
  return label;
}

double intrinsic_distance(const GeodesicGraph& graph, std::size_t p, std::size_t q) {
  if (p >= graph.size() || q >= graph.size()) throw InputError("node index out of range");
  if (p == q) return 0.0;
  if (graph.component(p) != graph.component(q)) return kInf;
  return graph.distances({{p, 0.0}}, {}, kInf, q).distance[q];
}

CapInterior cap_interior(const std::vector<std::size_t>& region, double delta, const GeodesicGraph& graph) {
  const std::size_t n = graph.size();
  std::vector<char> mask(n, 0);
  for (std::size_t i : region) {
    if (i >= n) throw InputError("region node index out of range");
    mask[i] = 1;
  }
  CapInterior out;
  std::vector<std::pair<std::size_t, double>> sources;
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    for (const auto& e : graph.neighbors(i)) {
      if (!mask[e.to]) {
        out.boundary.push_back(i);
        sources.push_back({i, 0.0});
        break;
      }
    }
  }
  out.distance = graph.distances(sources, mask).distance;
  std::vector<char> keep(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[i] && out.distance[i] > delta) {
      keep[i] = 1;
      out.nodes.push_back(i);
    }
  }
  out.component = graph.components_of(keep, &out.component_count);
  return out;
}

Chain piecewise_geodesic_chain(const GeodesicGraph& graph, std::size_t p, std::size_t q, double delta, double area) {
  if (!(delta > 0.0)) throw InputError("chain step delta must be positive");
  if (!(area > 0.0)) throw InputError("chain bound needs a positive area");
  Chain c;
  c.delta = delta;
  const int n = static_cast<int>(graph.node(p).point.size()) - 1;
  c.L = area * std::pow(2.0, n) / (unit_ball_volume(n) * std::pow(delta, n));
  c.path = graph.shortest_path(p, q);
  if (c.path.empty()) throw InputError("chain endpoints lie in different components");
  c.path_arclength.assign(c.path.size(), 0.0);
  for (std::size_t i = 1; i < c.path.size(); ++i)
    c.path_arclength[i] = c.path_arclength[i - 1] + (graph.node(c.path[i]).point - graph.node(c.path[i - 1]).point).norm();
  c.total_length = c.path_arclength.back();

  auto position_at = [&](double s) {
    const auto it = std::upper_bound(c.path_arclength.begin(), c.path_arclength.end(), s);
    const std::size_t j = std::min<std::size_t>(static_cast<std::size_t>(it - c.path_arclength.begin()), c.path.size() - 1);
    if (j == 0) return graph.node(c.path[0]).point;
    const double seg = c.path_arclength[j] - c.path_arclength[j - 1];
    const double t = seg > 0 ? std::clamp((s - c.path_arclength[j - 1]) / seg, 0.0, 1.0) : 1.0;
    return Vec(graph.node(c.path[j - 1]).point + t * (graph.node(c.path[j]).point - graph.node(c.path[j - 1]).point));
  };

  c.waypoints.push_back(p);
  c.positions.push_back(graph.node(p).point);
  if (c.total_length > 0.0) {
    c.N = static_cast<std::size_t>(std::ceil(c.total_length / delta)) - 1;
    for (std::size_t j = 1; j <= c.N; ++j) {
      const Vec x = position_at(static_cast<double>(j) * delta);
      c.positions.push_back(x);
      c.waypoints.push_back(graph.nearest_node(x));
      c.arc_lengths.push_back(delta);
    }
    c.positions.push_back(graph.node(q).point);
    c.waypoints.push_back(q);
    c.arc_lengths.push_back(c.total_length - static_cast<double>(c.N) * delta);
  }
  c.within_bound = static_cast<double>(c.N) <= c.L && c.total_length <= c.L;
  return c;
}

HarnackChain harnack_chain(const GeodesicGraph& graph, const Chain& chain, double eps, double rho, double delta,
                           const ConstantsReport& ledger) {
  if (!(eps >= 0.0)) throw InputError("Harnack chain needs eps >= 0");
  if (!(eps < ledger.eps0)) throw InputError("Harnack chain needs eps < eps0 of the ledger");
  if (!(rho > 0.0) || !(delta > 0.0)) throw InputError("Harnack chain needs positive rho and delta");
  HarnackChain h;
  h.eps = eps;
  h.N0 = ledger.N0.value;
  h.r0 = rho * std::sin(delta / (2.0 * rho));

  auto position_at = [&](double s) {
    const auto& arc = chain.path_arclength;
    const auto it = std::upper_bound(arc.begin(), arc.end(), s);
    const std::size_t j = std::min<std::size_t>(static_cast<std::size_t>(it - arc.begin()), chain.path.size() - 1);
    if (j == 0) return graph.node(chain.path[0]).point;
    const double seg = arc[j] - arc[j - 1];
    const double t = seg > 0 ? std::clamp((s - arc[j - 1]) / seg, 0.0, 1.0) : 1.0;
    return Vec(graph.node(chain.path[j - 1]).point + t * (graph.node(chain.path[j]).point - graph.node(chain.path[j - 1]).point));
  };

  const double total = chain.total_length;
  double s = 0.0;
  std::size_t i = 0;
  double factor = 1.0;  // (1 - eps)^i
  Vec here = position_at(0.0);
  std::size_t arcs_touched = 0;
  double last_arc_end = -1.0;
  while (true) {
    HarnackLink link;
    link.point = here;
    link.node = graph.nearest_node(here);
    link.radius = factor * h.r0;
    if (s >= total) {
      h.links.push_back(link);
      break;
    }
    const double step = link.radius / 4.0;
    const double s_next = std::min(total, s + step);
    const Vec next = position_at(s_next);
    const Vec& nu = graph.node(link.node).inner_normal;
    const Vec d = next - here;
    link.tangential_step = (d - d.dot(nu) * nu).norm();
    if (link.tangential_step > link.radius / 4.0 * (1.0 + 1e-12)) h.within_quarter = false;
    h.links.push_back(link);
    // Count delta arcs that need more than one Harnack step.
    const double arc_index = std::floor(s / chain.delta);
    if (arc_index != last_arc_end && step < chain.delta) {
      ++arcs_touched;
      last_arc_end = arc_index;
    }
    s = s_next;
    here = next;
    ++i;
    factor = std::pow(1.0 - eps, static_cast<double>(i));
    if (!(factor > 0.0)) throw NumericalError("harnack chain", "radii underflow before the chain end");
  }
  h.N = h.links.size() - 1;
  h.within_count = static_cast<double>(h.N) <= h.N0;
  h.subdivided_arcs = arcs_touched;
  return h;
}

nlohmann::json to_json(const Chain& c) {
  nlohmann::json pts = nlohmann::json::array();
  for (std::size_t i = 0; i < c.positions.size(); ++i) {
    pts.push_back({{"node", c.waypoints[i]}, {"position", to_json(c.positions[i])}});
  }
  return {{"delta", c.delta},   {"N", c.N},           {"L", c.L},
          {"total_length", c.total_length}, {"within_bound", c.within_bound},
          {"arc_lengths", c.arc_lengths},   {"waypoints", pts}};
}

}  // namespace soapbubble
