#include "dlo/cloudproc.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

#include "dlo/error.hpp"
#include "dlo/rng.hpp"
#include "dlo/simd/kernels.hpp"

namespace dlo {

bool lex_less(const Vec3& a, const Vec3& b) {
  return std::tie(a.x(), a.y(), a.z()) < std::tie(b.x(), b.y(), b.z());
}

namespace {

struct Hypothesis {
  Vec3 normal;
  double d;
};

std::optional<Hypothesis> plane_through(const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 n = (b - a).cross(c - a);
  const double len = n.norm();
  const double scale = std::max({(b - a).norm(), (c - a).norm(), 1e-300});
  if (!(len > 1e-12 * scale * scale)) return std::nullopt;
  const Vec3 u = n / len;
  return Hypothesis{u, -u.dot(a)};
}

}  // namespace

PlaneModel ransac_plane(const PointCloud& cloud, double inlier_tol, int max_iters,
                        std::uint64_t seed, std::optional<Vec3> viewpoint) {
  const std::size_t n = cloud.size();
  if (n < 3) throw Error(ErrorCode::DegenerateGeometry, "RANSAC needs at least 3 points");
  if (!(inlier_tol > 0.0) || max_iters <= 0) {
    throw Error(ErrorCode::ContractViolation, "RANSAC tolerance and iterations must be positive");
  }
  const PointsSoA soa(cloud.points);
  const auto& k = simd::kernels();
  Rng rng(seed);

  std::size_t best_count = 0;
  std::optional<Hypothesis> best;
  for (int it = 0; it < max_iters; ++it) {
    std::array<std::size_t, 3> idx{};
    if (n == 3) {
      idx = {0, 1, 2};
    } else {
      idx[0] = rng.index(n);
      do { idx[1] = rng.index(n); } while (idx[1] == idx[0]);
      do { idx[2] = rng.index(n); } while (idx[2] == idx[0] || idx[2] == idx[1]);
    }
    const auto h = plane_through(cloud[idx[0]], cloud[idx[1]], cloud[idx[2]]);
    if (!h) continue;
    const double coef[4] = {h->normal.x(), h->normal.y(), h->normal.z(), h->d};
    const std::size_t count =
        k.count_plane_inliers(coef, soa.x.data(), soa.y.data(), soa.z.data(), n, inlier_tol);
    if (count > best_count) {
      best_count = count;
      best = h;
    }
    if (n == 3) break;
  }
  if (!best) throw Error(ErrorCode::DegenerateGeometry, "all RANSAC samples were collinear");

  // PCA refit on the consensus set.
  Vec3 centroid = Vec3::Zero();
  std::size_t m = 0;
  for (const auto& p : cloud.points) {
    if (std::abs(best->normal.dot(p) + best->d) <= inlier_tol) {
      centroid += p;
      ++m;
    }
  }
  centroid /= static_cast<double>(m);
  Mat3 cov = Mat3::Zero();
  for (const auto& p : cloud.points) {
    if (std::abs(best->normal.dot(p) + best->d) <= inlier_tol) {
      const Vec3 q = p - centroid;
      cov += q * q.transpose();
    }
  }
  Vec3 normal = best->normal;
  if (m >= 3) {
    Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    // Eigenvalues ascend; column 0 spans the least-variance direction.
    if (eig.info() == Eigen::Success && eig.eigenvalues()(1) > 0.0) {
      normal = eig.eigenvectors().col(0).normalized();
    }
  }
  const bool flip = viewpoint ? normal.dot(*viewpoint - centroid) < 0.0 : normal.z() < 0.0;
  if (flip) normal = -normal;

  PlaneModel plane = PlaneModel::from_point_normal(centroid, normal);
  const double coef[4] = {plane.normal.x(), plane.normal.y(), plane.normal.z(), plane.d};
  plane.inlier_count =
      k.count_plane_inliers(coef, soa.x.data(), soa.y.data(), soa.z.data(), n, inlier_tol);
  return plane;
}

PointCloud voxel_downsample(const PointCloud& cloud, double d_m, const Vec3& origin) {
  if (!(d_m > 0.0)) throw Error(ErrorCode::ContractViolation, "voxel size must be positive");
  using Key = std::array<std::int64_t, 3>;
  struct Acc {
    Vec3 sum = Vec3::Zero();
    std::size_t count = 0;
  };
  std::map<Key, Acc> bins;
  for (const auto& p : cloud.points) {
    const Vec3 rel = (p - origin) / d_m;
    const Key key{static_cast<std::int64_t>(std::floor(rel.x())),
                  static_cast<std::int64_t>(std::floor(rel.y())),
                  static_cast<std::int64_t>(std::floor(rel.z()))};
    auto& acc = bins[key];
    acc.sum += p;
    ++acc.count;
  }
  PointCloud out;
  out.points.reserve(bins.size());
  for (const auto& [key, acc] : bins) {
    out.points.push_back(acc.sum / static_cast<double>(acc.count));
  }
  return out;
}

PointCloud merge_close_points(const PointCloud& cloud, double t_P) {
  if (!(t_P > 0.0)) throw Error(ErrorCode::ContractViolation, "merge threshold must be positive");
  std::vector<Vec3> pts = cloud.points;
  std::sort(pts.begin(), pts.end(), lex_less);
  const double t2 = t_P * t_P;
  const auto& k = simd::kernels();
  std::vector<double> d2;
  while (pts.size() >= 2) {
    // Closest pair, scanning pairs (i < j) in lexicographic order so the
    // first strict minimum is the lexicographically smallest tied pair.
    const PointsSoA soa(pts);
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      const double q[3] = {pts[i].x(), pts[i].y(), pts[i].z()};
      const std::size_t rest = pts.size() - i - 1;
      d2.resize(rest);
      k.sq_dist3(q, soa.x.data() + i + 1, soa.y.data() + i + 1, soa.z.data() + i + 1, rest,
                 d2.data());
      for (std::size_t j = 0; j < rest; ++j) {
        if (d2[j] < best) {
          best = d2[j];
          bi = i;
          bj = i + 1 + j;
        }
      }
    }
    if (!(best < t2)) break;
    const Vec3 mid = 0.5 * (pts[bi] + pts[bj]);
    pts.erase(pts.begin() + static_cast<std::ptrdiff_t>(bj));
    pts.erase(pts.begin() + static_cast<std::ptrdiff_t>(bi));
    pts.insert(std::upper_bound(pts.begin(), pts.end(), mid, lex_less), mid);
  }
  return PointCloud{std::move(pts)};
}

PointCloud project_to_plane(const PointCloud& cloud, const PlaneModel& plane) {
  PointCloud out;
  out.points.reserve(cloud.size());
  for (const auto& p : cloud.points) out.points.push_back(plane.project(p));
  return out;
}

}  // namespace dlo
