#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dlo/bspline.hpp"
#include "dlo/cloud.hpp"
#include "dlo/geom.hpp"
#include "dlo/worldsim.hpp"

namespace dlo {

struct RegistrationResult {
  Rotation3 rotation;
  Vec3 translation = Vec3::Zero();
  double rmse = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> rmse_history;  // before the first iteration, then after each
};

/// Point-to-point ICP aligning `source` onto `target`. Stops when the RMSE
/// changes by less than `tol` or after max_iters iterations. Throws
/// ContractViolation for clouds with fewer than 3 points and DegenerateInput
/// when all source points coincide.
RegistrationResult icp(const PointCloud& source, const PointCloud& target, int max_iters = 50,
                       double tol = 1e-9);

/// Best rigid transform (R, t) minimising sum |R src_i + t - dst_i|^2.
Pose kabsch(const std::vector<Vec3>& src, const std::vector<Vec3>& dst);

struct CurveError {
  double mean = 0.0;
  double max = 0.0;
};

/// Samples `curve` at n uniform parameters and measures each sample's
/// distance to `truth` (dense parameter search, then golden-section refine).
CurveError curve_error(const BSplineCurve& curve, const BSplineCurve& truth, int n = 200);

/// Footprint of a scene cable on its support plane: the centerline moved
/// down by the cable radius along the plane normal.
BSplineCurve cable_footprint(const WorldScene& scene, std::size_t cable);

struct CableReport {
  std::string name;
  double icp_rmse = 0.0;
  int icp_iterations = 0;
  double curve_mean = 0.0;
  double curve_max = 0.0;
  std::size_t endpoints = 0;
  std::size_t segments = 0;
  std::size_t probes = 0;
  double reference_rmse_m = 0.0;
};

struct EvalReport {
  std::string run_dir;
  std::string reference;
  double runtime_s = 0.0;
  std::vector<CableReport> cables;
};

std::string report_to_json_text(const EvalReport& report);
EvalReport report_from_json_text(const std::string& text);

}  // namespace dlo
