#pragma once

// Intrinsic distances on S approximated by shortest paths in a symmetrized
// k-nearest-neighbour graph over surface samples (chord edge weights).

#include "soapbubble/constants.hpp"
#include "soapbubble/surface.hpp"

#include <cstdint>
#include <limits>
#include <vector>

namespace soapbubble {

inline constexpr int kDefaultGraphNeighbors = 16;

struct GraphEdge {
  std::size_t to;
  double weight;
};

struct DistanceField {
  std::vector<double> distance;
  std::vector<std::size_t> predecessor;  // npos for sources and unreached nodes
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
};

class GeodesicGraph {
 public:
  /// Samples `node_budget` points of the surface and links each to its k nearest.
  GeodesicGraph(const Surface& surface, std::size_t node_budget, int k = kDefaultGraphNeighbors,
                std::uint64_t seed = 0);
  /// Graph over given samples; `require_connected` raises when components > 1.
  GeodesicGraph(std::vector<SurfaceSample> nodes, int k, bool require_connected);

  std::size_t size() const { return nodes_.size(); }
  int k() const { return k_; }
  const std::vector<SurfaceSample>& nodes() const { return nodes_; }
  const SurfaceSample& node(std::size_t i) const { return nodes_[i]; }
  const std::vector<Vec>& positions() const { return positions_; }
  const std::vector<GraphEdge>& neighbors(std::size_t i) const { return adjacency_[i]; }
  const std::vector<double>& weights() const { return weights_; }

  std::size_t component_count() const { return component_count_; }
  int component(std::size_t i) const { return component_[i]; }
  double mean_edge_length() const { return mean_edge_; }
  double max_edge_length() const { return max_edge_; }

  std::size_t nearest_node(const Vec& x) const;

  /// Multi-source Dijkstra; sources start at the given offsets. When `mask` is
  /// non-empty, only nodes with mask[i] set are traversed.
  DistanceField distances(const std::vector<std::pair<std::size_t, double>>& sources,
                          const std::vector<char>& mask = {}, double stop_at = std::numeric_limits<double>::infinity(),
                          std::size_t target = DistanceField::npos) const;

  /// Node sequence of a shortest path p -> q (empty if unreachable).
  std::vector<std::size_t> shortest_path(std::size_t p, std::size_t q) const;

  /// Connected components of the subgraph induced by `mask`; label -1 outside.
  std::vector<int> components_of(const std::vector<char>& mask, std::size_t* count = nullptr) const;

 private:
  void build();

  std::vector<SurfaceSample> nodes_;
  std::vector<Vec> positions_;
  std::vector<double> weights_;
  int k_;
  KdTree index_;
  std::vector<std::vector<GraphEdge>> adjacency_;
  std::vector<int> component_;
  std::size_t component_count_ = 0;
  double mean_edge_ = 0.0;
  double max_edge_ = 0.0;
};

/// Shortest-path length; infinity when p and q lie in different components.
double intrinsic_distance(const GeodesicGraph& graph, std::size_t p, std::size_t q);

struct CapInterior {
  std::vector<std::size_t> nodes;     // region nodes farther than delta from the boundary
  std::vector<std::size_t> boundary;  // region nodes with a neighbour outside the region
  std::vector<double> distance;       // per graph node; infinity outside region
  std::vector<int> component;         // per graph node; -1 outside the result
  std::size_t component_count = 0;
};

CapInterior cap_interior(const std::vector<std::size_t>& region, double delta, const GeodesicGraph& graph);

struct Chain {
  std::vector<std::size_t> waypoints;   // nearest graph node of each waypoint
  std::vector<Vec> positions;           // waypoint positions on the path polyline
  std::vector<double> arc_lengths;      // polyline length between consecutive waypoints
  double total_length = 0.0;
  std::size_t N = 0;                    // number of full delta arcs
  double delta = 0.0;
  double L = 0.0;                       // length/count bound for the chain
  bool within_bound = true;             // N <= L and total_length <= L
  std::vector<std::size_t> path;        // underlying graph path
  std::vector<double> path_arclength;   // cumulative length along `path`
};

/// Subdivides a shortest path p -> q into arcs of length delta. `area` feeds
/// the bound L = |S| 2^n / (omega_n delta^n).
Chain piecewise_geodesic_chain(const GeodesicGraph& graph, std::size_t p, std::size_t q, double delta, double area);

struct HarnackLink {
  Vec point;
  std::size_t node = 0;
  double radius = 0.0;
  double tangential_step = 0.0;  // |P_T(p_{i+1} - p_i)| measured at p_i
};

struct HarnackChain {
  std::vector<HarnackLink> links;
  std::size_t N = 0;  // number of steps
  double N0 = 0.0;
  double eps = 0.0;
  double r0 = 0.0;
  bool within_count = true;    // N <= N0
  bool within_quarter = true;  // every step inside the r_i/4 patch
  std::size_t subdivided_arcs = 0;
};

/// Radii r_i = (1 - eps)^i rho sin(delta / (2 rho)) along the chain path.
/// Requires 0 <= eps < eps0 of the ledger.
HarnackChain harnack_chain(const GeodesicGraph& graph, const Chain& chain, double eps, double rho, double delta,
                           const ConstantsReport& ledger);

nlohmann::json to_json(const Chain& chain);

}  // namespace soapbubble
