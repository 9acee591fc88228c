#pragma once

#include <filesystem>
#include <vector>

#include "dlo/bspline.hpp"
#include "dlo/cloud.hpp"
#include "dlo/geom.hpp"

namespace dlo {

/// Second conditioning pass on a merged cloud: voxel_downsample(d_m) then
/// merge_close_points(t_P).
PointCloud refine_merged(const PointCloud& cloud, const ReconParams& params);

struct SplineFit {
  BSplineCurve curve;
  std::vector<double> params;  // parameter of each data point
  bool polyline_fallback = false;
};

/// Interpolating clamped B-spline through ordered points: chord-length
/// parameters, knots by averaging, dense LU solve. With fewer than degree+1
/// points the degree drops to (count - 1); a singular system falls back to
/// the degree-1 polyline through the points. Throws DegenerateInput for
/// fewer than two distinct points.
SplineFit fit_bspline(const std::vector<Vec3>& points, int degree = 3);

/// n >= 2 points at uniform parameter steps, both ends included.
PointCloud sample_curve(const BSplineCurve& curve, int n);

/// {"degree", "knots", "control_points"}.
void write_spline_json(const std::filesystem::path& path, const BSplineCurve& curve);
BSplineCurve read_spline_json(const std::filesystem::path& path);

}  // namespace dlo
