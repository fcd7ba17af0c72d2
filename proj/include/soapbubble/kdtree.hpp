#pragma once

#include "soapbubble/geometry.hpp"

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace soapbubble {

struct Neighbor {
  double distance_sq;
  std::size_t index;
};

/// Static kd-tree over a borrowed point set. Queries are read-only and may run
/// concurrently.
class KdTree {
 public:
  KdTree() = default;
  explicit KdTree(std::span<const Vec> points);

  /// k nearest neighbours sorted by distance (ties by index).
  std::vector<Neighbor> nearest(const Vec& query, std::size_t k) const;
  /// All points with |p - query| <= radius, sorted by distance.
  std::vector<Neighbor> within(const Vec& query, double radius) const;

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }

 private:
  struct Node {
    std::size_t begin, end;  // range in order_
    int axis = -1;           // -1: leaf
    double split = 0.0;
    std::size_t left = 0, right = 0;
  };

  std::size_t build(std::size_t begin, std::size_t end, int depth);
  template <class Visit>
  void search(std::size_t node, const Vec& q, double& bound_sq, Visit&& visit) const;

  std::span<const Vec> points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
  int dim_ = 0;
};

}  // namespace soapbubble
