#include "scancalib/kdtree.hpp"

#include <algorithm>
#include <numeric>

namespace scancalib {

namespace {
constexpr int kLeafSize = 12;
}

KdTree3::KdTree3(const std::vector<Vec3>& points) : points_(points) {
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0);
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / kLeafSize + 8);
    root_ = build(0, static_cast<int>(points_.size()));
  }
}

int KdTree3::build(int begin, int end) {
  Node node;
  node.begin = begin;
  node.end = end;
  if (end - begin <= kLeafSize) {
    // Leaf: sort indices so equal-distance ties resolve to the smallest.
    std::sort(order_.begin() + begin, order_.begin() + end);
    nodes_.push_back(node);
    return static_cast<int>(nodes_.size()) - 1;
  }
  Vec3 lo = points_[order_[begin]];
  Vec3 hi = lo;
  for (int i = begin + 1; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  const int mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int a, int b) {
                     const double pa = points_[a][axis], pb = points_[b][axis];
                     return pa < pb || (pa == pb && a < b);
                   });
  node.axis = axis;
  node.split = points_[order_[mid]][axis];
  const int self = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[self].left = left;
  nodes_[self].right = right;
  return self;
}

template <typename Visitor>
void KdTree3::search(int node_id, const Vec3& query, double& radius2,
                     Visitor&& visit) const {
  const Node& node = nodes_[node_id];
  if (node.left < 0) {
    for (int i = node.begin; i < node.end; ++i) {
      const int idx = order_[i];
      const double d2 = (points_[idx] - query).squaredNorm();
      visit(idx, d2, radius2);
    }
    return;
  }
  const double delta = query[node.axis] - node.split;
  const int near = delta < 0.0 ? node.left : node.right;
  const int far = delta < 0.0 ? node.right : node.left;
  search(near, query, radius2, visit);
  if (delta * delta <= radius2) {
    search(far, query, radius2, visit);
  }
}

std::optional<KdTree3::Hit> KdTree3::nearest(const Vec3& query, double max_dist) const {
  if (root_ < 0) return std::nullopt;
  Hit best;
  double radius2 = max_dist * max_dist;
  search(root_, query, radius2, [&](int idx, double d2, double& r2) {
    if (d2 < best.dist2 || (d2 == best.dist2 && idx < best.index)) {
      if (d2 <= max_dist * max_dist) {
        best.index = idx;
        best.dist2 = d2;
        r2 = d2;
      }
    }
  });
  if (best.index < 0) return std::nullopt;
  return best;
}

std::vector<KdTree3::Hit> KdTree3::k_nearest(const Vec3& query, int k,
                                             int skip_index) const {
  std::vector<Hit> heap;  // max-heap: front holds the worst of the kept k
  if (root_ < 0 || k <= 0) return heap;
  auto better = [](const Hit& a, const Hit& b) {
    return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
  };
  double radius2 = std::numeric_limits<double>::infinity();
  search(root_, query, radius2, [&](int idx, double d2, double& r2) {
    if (idx == skip_index) return;
    const Hit h{idx, d2};
    if (static_cast<int>(heap.size()) < k) {
      heap.push_back(h);
      std::push_heap(heap.begin(), heap.end(), better);
    } else if (better(h, heap.front())) {
      std::pop_heap(heap.begin(), heap.end(), better);
      heap.back() = h;
      std::push_heap(heap.begin(), heap.end(), better);
    }
    if (static_cast<int>(heap.size()) == k) {
      r2 = heap.front().dist2;
    }
  });
  std::sort_heap(heap.begin(), heap.end(), better);
  return heap;
}

}  // namespace scancalib
