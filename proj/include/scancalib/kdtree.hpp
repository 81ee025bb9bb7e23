#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "scancalib/geometry.hpp"

namespace scancalib {

// Static 3D kd-tree for nearest-neighbor queries. Ties on distance resolve
// to the smallest point index, which keeps registration deterministic.
class KdTree3 {
 public:
  struct Hit {
    int index = -1;
    double dist2 = std::numeric_limits<double>::infinity();
  };

  explicit KdTree3(const std::vector<Vec3>& points);

  std::size_t size() const { return points_.size(); }

  // Nearest point within max_dist (Euclidean); nullopt when none qualifies.
  std::optional<Hit> nearest(const Vec3& query, double max_dist) const;

  // The k nearest points, closest first. skip_index excludes one point
  // (used when the query is itself a cloud member).
  std::vector<Hit> k_nearest(const Vec3& query, int k, int skip_index = -1) const;

 private:
  struct Node {
    int left = -1;
    int right = -1;
    int begin = 0;
    int end = 0;     // leaf range in order_ when left == -1
    int axis = 0;
    double split = 0.0;
  };

  int build(int begin, int end);

  template <typename Visitor>
  void search(int node, const Vec3& query, double& radius2, Visitor&& visit) const;

  std::vector<Vec3> points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace scancalib
