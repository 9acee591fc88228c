#include "dlo/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dlo/error.hpp"

namespace dlo {

KdTree3::KdTree3(std::span<const Vec3> points, std::size_t leaf_size)
    : leaf_size_(std::max<std::size_t>(1, leaf_size)), kernels_(&simd::kernels()) {
  order_.resize(points.size());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  if (!points.empty()) build(0, points.size(), points);
  std::vector<Vec3> ordered;
  ordered.reserve(points.size());
  for (auto i : order_) ordered.push_back(points[i]);
  soa_ = PointsSoA(ordered);
}

std::size_t KdTree3::build(std::size_t begin, std::size_t end, std::span<const Vec3> points) {
  const std::size_t id = nodes_.size();
  nodes_.push_back(Node{begin, end});
  if (end - begin <= leaf_size_) {
    // Index order inside a leaf keeps kernel tie-breaking equal to brute force.
    std::sort(order_.begin() + static_cast<std::ptrdiff_t>(begin),
              order_.begin() + static_cast<std::ptrdiff_t>(end));
    return id;
  }
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (std::size_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points[order_[i]]);
    hi = hi.cwiseMax(points[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  const std::size_t mid = begin + (end - begin) / 2;
  auto first = order_.begin() + static_cast<std::ptrdiff_t>(begin);
  auto nth = order_.begin() + static_cast<std::ptrdiff_t>(mid);
  auto last = order_.begin() + static_cast<std::ptrdiff_t>(end);
  std::nth_element(first, nth, last, [&](std::size_t a, std::size_t b) {
    const double va = points[a][axis], vb = points[b][axis];
    return va < vb || (va == vb && a < b);
  });
  const double split = points[*nth][axis];
  const std::size_t left = build(begin, mid, points);
  const std::size_t right = build(mid, end, points);
  Node& node = nodes_[id];
  node.axis = axis;
  node.split = split;
  node.left = left;
  node.right = right;
  return id;
}

KdTree3::Hit KdTree3::nearest(const Vec3& q) const {
  if (order_.empty()) throw Error(ErrorCode::EmptyInput, "nearest query on an empty tree");
  const double qa[3] = {q.x(), q.y(), q.z()};
  Hit best{std::numeric_limits<std::size_t>::max(), std::numeric_limits<double>::infinity()};
  nearest_rec(0, qa, best);
  return best;
}

void KdTree3::nearest_rec(std::size_t id, const double* q, Hit& best) const {
  const Node& node = nodes_[id];
  if (node.axis < 0) {
    const std::size_t n = node.end - node.begin;
    const auto hit = kernels_->nearest3(q, soa_.x.data() + node.begin, soa_.y.data() + node.begin,
                                        soa_.z.data() + node.begin, n);
    const std::size_t idx = order_[node.begin + hit.index];
    if (hit.sq_dist < best.sq_dist || (hit.sq_dist == best.sq_dist && idx < best.index)) {
      best = {idx, hit.sq_dist};
    }
    return;
  }
  const double diff = q[node.axis] - node.split;
  const std::size_t near = diff < 0.0 ? node.left : node.right;
  const std::size_t far = diff < 0.0 ? node.right : node.left;
  nearest_rec(near, q, best);
  // <= so that equal-distance points on the far side still compete on index.
  if (diff * diff <= best.sq_dist) nearest_rec(far, q, best);
}

std::vector<std::size_t> KdTree3::within(const Vec3& q, double radius) const {
  std::vector<std::size_t> out;
  if (order_.empty()) return out;
  const double qa[3] = {q.x(), q.y(), q.z()};
  within_rec(0, qa, radius * radius, out);
  std::sort(out.begin(), out.end());
  return out;
}

void KdTree3::within_rec(std::size_t id, const double* q, double r2,
                         std::vector<std::size_t>& out) const {
  const Node& node = nodes_[id];
  if (node.axis < 0) {
    const std::size_t n = node.end - node.begin;
    double buf[64];
    std::vector<double> heap;
    double* d = buf;
    if (n > 64) {
      heap.resize(n);
      d = heap.data();
    }
    kernels_->sq_dist3(q, soa_.x.data() + node.begin, soa_.y.data() + node.begin,
                       soa_.z.data() + node.begin, n, d);
    for (std::size_t i = 0; i < n; ++i) {
      if (d[i] <= r2) out.push_back(order_[node.begin + i]);
    }
    return;
  }
  const double diff = q[node.axis] - node.split;
  const std::size_t near = diff < 0.0 ? node.left : node.right;
  const std::size_t far = diff < 0.0 ? node.right : node.left;
  within_rec(near, q, r2, out);
  if (diff * diff <= r2) within_rec(far, q, r2, out);
}

}  // namespace dlo
