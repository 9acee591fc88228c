#pragma once

#include <cstdint>
#include <optional>

#include "dlo/cloud.hpp"

namespace dlo {

/// RANSAC over random 3-point hypotheses; the winner (most inliers, earliest
/// hypothesis on ties) is refit by PCA on its inliers. The normal is oriented
/// toward `viewpoint` when given, otherwise toward +z. Deterministic in `seed`.
/// Throws DegenerateGeometry when fewer than 3 points or every sample is collinear.
PlaneModel ransac_plane(const PointCloud& cloud, double inlier_tol, int max_iters,
                        std::uint64_t seed, std::optional<Vec3> viewpoint = std::nullopt);

/// One centroid per occupied voxel of edge d_m anchored at `origin`, emitted
/// in lexicographic voxel-index order.
PointCloud voxel_downsample(const PointCloud& cloud, double d_m, const Vec3& origin = Vec3::Zero());

/// Repeatedly replaces the closest pair closer than t_P by its midpoint until
/// none remains. Ties go to the lexicographically smallest pair. Output is in
/// lexicographic coordinate order.
PointCloud merge_close_points(const PointCloud& cloud, double t_P);

PointCloud project_to_plane(const PointCloud& cloud, const PlaneModel& plane);

/// Strict lexicographic order on (x, y, z).
bool lex_less(const Vec3& a, const Vec3& b);

}  // namespace dlo
