#include "soapbubble/kdtree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <queue>

namespace soapbubble {

namespace {
constexpr std::size_t kLeafSize = 12;

bool closer(const Neighbor& a, const Neighbor& b) {
  return a.distance_sq < b.distance_sq || (a.distance_sq == b.distance_sq && a.index < b.index);
}
}  // namespace

KdTree::KdTree(std::span<const Vec> points) : points_(points) {
  if (points.empty()) return;
  dim_ = static_cast<int>(points.front().size());
  order_.resize(points.size());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  nodes_.reserve(2 * points.size() / kLeafSize + 1);
  build(0, points.size(), 0);
}

std::size_t KdTree::build(std::size_t begin, std::size_t end, int depth) {
  const std::size_t id = nodes_.size();
  nodes_.push_back({begin, end});
  if (end - begin <= kLeafSize) return id;

  // Split along the axis of largest spread.
  Vec lo = points_[order_[begin]], hi = lo;
  for (std::size_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                   order_.begin() + static_cast<std::ptrdiff_t>(mid),
                   order_.begin() + static_cast<std::ptrdiff_t>(end),
                   [&](std::size_t a, std::size_t b) { return points_[a][axis] < points_[b][axis]; });
  const double split = points_[order_[mid]][axis];
  const std::size_t left = build(begin, mid, depth + 1);
  const std::size_t right = build(mid, end, depth + 1);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

template <class Visit>
void KdTree::search(std::size_t node_id, const Vec& q, double& bound_sq, Visit&& visit) const {
  const Node& node = nodes_[node_id];
  if (node.axis < 0) {
    for (std::size_t i = node.begin; i < node.end; ++i) {
      const std::size_t idx = order_[i];
      const double d2 = (points_[idx] - q).squaredNorm();
      if (d2 <= bound_sq) visit(Neighbor{d2, idx});
    }
    return;
  }
  const double diff = q[node.axis] - node.split;
  const std::size_t first = diff < 0 ? node.left : node.right;
  const std::size_t second = diff < 0 ? node.right : node.left;
  search(first, q, bound_sq, visit);
  if (diff * diff <= bound_sq) search(second, q, bound_sq, visit);
}

std::vector<Neighbor> KdTree::nearest(const Vec& query, std::size_t k) const {
  std::vector<Neighbor> out;
  if (k == 0 || points_.empty()) return out;
  k = std::min(k, points_.size());
  std::priority_queue<Neighbor, std::vector<Neighbor>, decltype(&closer)> heap(&closer);
  double bound = std::numeric_limits<double>::infinity();
  search(0, query, bound, [&](const Neighbor& n) {
    if (heap.size() < k) {
      heap.push(n);
    } else if (closer(n, heap.top())) {
      heap.pop();
      heap.push(n);
    }
    if (heap.size() == k) bound = heap.top().distance_sq;
  });
  out.reserve(heap.size());
  while (!heap.empty()) {
    out.push_back(heap.top());
    heap.pop();
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::vector<Neighbor> KdTree::within(const Vec& query, double radius) const {
  std::vector<Neighbor> out;
  if (points_.empty()) return out;
  double bound = radius * radius;
  search(0, query, bound, [&](const Neighbor& n) { out.push_back(n); });
  std::sort(out.begin(), out.end(), closer);
  return out;
}

}  // namespace soapbubble
