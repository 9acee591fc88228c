#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "dlo/geom.hpp"

namespace dlo {

/// Ordered list of points in the base frame (meters).
struct PointCloud {
  std::vector<Vec3> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  const Vec3& operator[](std::size_t i) const { return points[i]; }

  Vec3 centroid() const;
  bool all_finite() const;
};

/// Structure-of-arrays copy of a cloud for the SIMD kernels.
struct PointsSoA {
  std::vector<double> x, y, z;

  PointsSoA() = default;
  explicit PointsSoA(std::span<const Vec3> pts);
  std::size_t size() const { return x.size(); }
};

/// Plane a·x + b·y + c·z + d = 0 with (a, b, c) unit-norm; normal = (a, b, c).
struct PlaneModel {
  Vec3 normal = Vec3::UnitZ();
  double d = 0.0;
  std::size_t inlier_count = 0;

  static PlaneModel from_point_normal(const Vec3& point, const Vec3& normal);

  double signed_distance(const Vec3& p) const { return normal.dot(p) + d; }
  Vec3 project(const Vec3& p) const { return p - signed_distance(p) * normal; }
  Vec3 origin() const { return -d * normal; }
};

/// Orthonormal in-plane axes (e1, e2) with e1 × e2 = normal. e1 is the base x
/// axis with its normal component removed (base y when x is nearly normal).
struct PlaneBasis {
  Vec3 origin;
  Vec3 e1, e2, normal;

  explicit PlaneBasis(const PlaneModel& plane);
  Vec2 to_2d(const Vec3& p) const { return {e1.dot(p - origin), e2.dot(p - origin)}; }
  Vec3 to_3d(const Vec2& uv, double height = 0.0) const {
    return origin + uv.x() * e1 + uv.y() * e2 + height * normal;
  }
};

// ASCII PLY (x y z float properties) and CSV with an "x,y,z" header. Values
// are written with 9 significant digits.
void write_ply(const std::filesystem::path& path, const PointCloud& cloud);
PointCloud read_ply(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const PointCloud& cloud);
PointCloud read_csv(const std::filesystem::path& path);

}  // namespace dlo
