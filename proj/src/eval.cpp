#include "dlo/eval.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

#include "dlo/error.hpp"
#include "dlo/fitting.hpp"
#include "dlo/kdtree.hpp"
#include "json.hpp"

namespace dlo {

Pose kabsch(const std::vector<Vec3>& src, const std::vector<Vec3>& dst) {
  if (src.size() != dst.size() || src.empty()) {
    throw Error(ErrorCode::ContractViolation, "kabsch needs equal, nonempty point lists");
  }
  Vec3 cs = Vec3::Zero(), cd = Vec3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    cs += src[i];
    cd += dst[i];
  }
  cs /= static_cast<double>(src.size());
  cd /= static_cast<double>(dst.size());
  Mat3 H = Mat3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) H += (src[i] - cs) * (dst[i] - cd).transpose();
  const Eigen::JacobiSVD<Mat3> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3 U = svd.matrixU(), V = svd.matrixV();
  Mat3 D = Mat3::Identity();
  if ((V * U.transpose()).determinant() < 0.0) D(2, 2) = -1.0;  // reflection fix
  Mat3 R = V * D * U.transpose();
  // Re-orthonormalise against round-off before the checked constructor.
  const Eigen::JacobiSVD<Mat3> clean(R, Eigen::ComputeFullU | Eigen::ComputeFullV);
  R = clean.matrixU() * clean.matrixV().transpose();
  Pose pose;
  pose.rotation = Rotation3(R);
  pose.translation = cd - R * cs;
  return pose;
}

RegistrationResult icp(const PointCloud& source, const PointCloud& target, int max_iters, double tol) {
  if (source.size() < 3 || target.size() < 3) {
    throw Error(ErrorCode::ContractViolation, "ICP needs at least 3 points in each cloud");
  }
  const Vec3 c = source.centroid();
  double spread = 0.0;
  for (const auto& p : source.points) spread = std::max(spread, (p - c).norm());
  if (!(spread > 1e-12)) throw Error(ErrorCode::DegenerateInput, "all source points coincide");

  const KdTree3 tree(target.points);
  std::vector<Vec3> cur = source.points, matched(cur.size());
  auto correspond = [&]() {
    double sum = 0.0;
    for (std::size_t i = 0; i < cur.size(); ++i) {
      const auto hit = tree.nearest(cur[i]);
      matched[i] = target[hit.index];
      sum += hit.sq_dist;
    }
    return std::sqrt(sum / static_cast<double>(cur.size()));
  };

  RegistrationResult res;
  Pose total;
  double rmse = correspond();
  res.rmse_history.push_back(rmse);
  for (int it = 1; it <= max_iters; ++it) {
    const Pose step = kabsch(cur, matched);
    for (auto& p : cur) p = step.apply(p);
    total = step * total;
    const double next = correspond();
    res.iterations = it;
    res.rmse_history.push_back(next);
    const double delta = std::abs(rmse - next);
    rmse = next;
    if (delta < tol) {
      res.converged = true;
      break;
    }
  }
  res.rotation = total.rotation;
  res.translation = total.translation;
  res.rmse = rmse;
  return res;
}

namespace {

double golden_min(const BSplineCurve& c, const Vec3& p, double a, double b) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  auto f = [&](double u) { return (c.evaluate(u) - p).squaredNorm(); };
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < 80 && b - a > 1e-15; ++i) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = f(x2);
    }
  }
  return std::min({f1, f2, f(a), f(b)});
}

}  // namespace

CurveError curve_error(const BSplineCurve& curve, const BSplineCurve& truth, int n) {
  if (n < 10) throw Error(ErrorCode::ContractViolation, "curve_error needs n >= 10");
  constexpr int kDense = 4000;
  std::vector<double> us(kDense);
  std::vector<Vec3> dense(kDense);
  const double a = truth.u_min(), b = truth.u_max();
  for (int i = 0; i < kDense; ++i) {
    us[static_cast<std::size_t>(i)] = a + (b - a) * i / (kDense - 1.0);
    dense[static_cast<std::size_t>(i)] = truth.evaluate(us[static_cast<std::size_t>(i)]);
  }
  const PointCloud samples = sample_curve(curve, n);
  CurveError err;
  for (const auto& p : samples.points) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < dense.size(); ++i) {
      const double d = (dense[i] - p).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    const double lo = us[best == 0 ? 0 : best - 1];
    const double hi = us[std::min(best + 1, dense.size() - 1)];
    const double d = std::sqrt(std::min(best_d, golden_min(truth, p, lo, hi)));
    err.mean += d;
    err.max = std::max(err.max, d);
  }
  err.mean /= static_cast<double>(samples.size());
  return err;
}

BSplineCurve cable_footprint(const WorldScene& scene, std::size_t cable) {
  const auto& c = scene.cables.at(cable);
  BSplineCurve f = c.centerline;
  for (auto& p : f.control) p -= c.radius * scene.plane.normal;
  return f;
}

std::string report_to_json_text(const EvalReport& r) {
  nlohmann::json j;
  j["run_dir"] = r.run_dir;
  j["reference"] = r.reference;
  j["runtime_s"] = r.runtime_s;
  j["cables"] = nlohmann::json::array();
  for (const auto& c : r.cables) {
    j["cables"].push_back({{"name", c.name},
                           {"icp_rmse_m", c.icp_rmse},
                           {"icp_iterations", c.icp_iterations},
                           {"curve_error_mean_m", c.curve_mean},
                           {"curve_error_max_m", c.curve_max},
                           {"endpoints", c.endpoints},
                           {"segments", c.segments},
                           {"probes", c.probes},
                           {"reference_rmse_m", c.reference_rmse_m}});
  }
  return j.dump(2) + "\n";
}

EvalReport report_from_json_text(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    EvalReport r;
    r.run_dir = j.at("run_dir").get<std::string>();
    r.reference = j.at("reference").get<std::string>();
    r.runtime_s = j.at("runtime_s").get<double>();
    for (const auto& c : j.at("cables")) {
      CableReport cr;
      cr.name = c.at("name").get<std::string>();
      cr.icp_rmse = c.at("icp_rmse_m").get<double>();
      cr.icp_iterations = c.at("icp_iterations").get<int>();
      cr.curve_mean = c.at("curve_error_mean_m").get<double>();
      cr.curve_max = c.at("curve_error_max_m").get<double>();
      cr.endpoints = c.at("endpoints").get<std::size_t>();
      cr.segments = c.at("segments").get<std::size_t>();
      cr.probes = c.at("probes").get<std::size_t>();
      cr.reference_rmse_m = c.at("reference_rmse_m").get<double>();
      r.cables.push_back(cr);
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Io, std::string("malformed eval report: ") + e.what());
  }
}

}  // namespace dlo
