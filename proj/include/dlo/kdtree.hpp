#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dlo/cloud.hpp"
#include "dlo/simd/kernels.hpp"

namespace dlo {

/// Static 3-d tree with bucketed leaves. Leaf buckets are stored as
/// contiguous SoA runs and scanned with the dispatched SIMD kernel.
class KdTree3 {
 public:
  struct Hit {
    std::size_t index;  // into the original point span
    double sq_dist;
  };

  explicit KdTree3(std::span<const Vec3> points, std::size_t leaf_size = 16);

  std::size_t size() const { return order_.size(); }

  /// Nearest point; ties resolve to the lowest original index. Requires size() > 0.
  Hit nearest(const Vec3& q) const;

  /// All points within radius (inclusive), sorted by original index.
  std::vector<std::size_t> within(const Vec3& q, double radius) const;

 private:
  struct Node {
    std::size_t begin, end;  // range in order_/soa_
    int axis = -1;           // -1 for leaves
    double split = 0.0;
    std::size_t left = 0, right = 0;
  };

  std::size_t build(std::size_t begin, std::size_t end, std::span<const Vec3> points);
  void nearest_rec(std::size_t node, const double* q, Hit& best) const;
  void within_rec(std::size_t node, const double* q, double r2, std::vector<std::size_t>& out) const;

  std::size_t leaf_size_;
  std::vector<std::size_t> order_;
  PointsSoA soa_;
  std::vector<Node> nodes_;
  const simd::KernelTable* kernels_;
};

}  // namespace dlo
