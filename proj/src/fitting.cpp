#include "dlo/fitting.hpp"

#include <Eigen/LU>

#include <cmath>
#include <fstream>
#include <sstream>

#include "dlo/cloudproc.hpp"
#include "dlo/error.hpp"
#include "json.hpp"

namespace dlo {

PointCloud refine_merged(const PointCloud& cloud, const ReconParams& params) {
  return merge_close_points(voxel_downsample(cloud, params.d_m, params.voxel_origin), params.t_P);
}

namespace {

SplineFit polyline(const std::vector<Vec3>& pts, const std::vector<double>& u) {
  SplineFit fit;
  fit.polyline_fallback = true;
  fit.params = u;
  fit.curve.degree = 1;
  fit.curve.control = pts;
  fit.curve.knots.push_back(0.0);
  fit.curve.knots.insert(fit.curve.knots.end(), u.begin(), u.end());
  fit.curve.knots.push_back(1.0);
  return fit;
}

}  // namespace

SplineFit fit_bspline(const std::vector<Vec3>& points, int degree) {
  if (degree < 1) throw Error(ErrorCode::ContractViolation, "spline degree must be >= 1");
  const std::size_t m = points.size();
  if (m < 2) throw Error(ErrorCode::DegenerateInput, "need at least two points to fit a curve");
  double total = 0.0;
  for (std::size_t k = 1; k < m; ++k) total += (points[k] - points[k - 1]).norm();
  if (!(total > 0.0)) throw Error(ErrorCode::DegenerateInput, "all fit points coincide");

  std::vector<double> u(m, 0.0);
  for (std::size_t k = 1; k + 1 < m; ++k) u[k] = u[k - 1] + (points[k] - points[k - 1]).norm() / total;
  u[m - 1] = 1.0;
  for (std::size_t k = 1; k < m; ++k) {
    if (!(u[k] > u[k - 1])) return polyline(points, u);  // repeated point: singular system
  }

  const std::size_t p = std::min<std::size_t>(static_cast<std::size_t>(degree), m - 1);
  if (p == 1) return polyline(points, u);

  SplineFit fit;
  fit.params = u;
  BSplineCurve& c = fit.curve;
  c.degree = static_cast<int>(p);
  c.knots.assign(p + 1, 0.0);
  for (std::size_t j = 1; j + p < m; ++j) {
    double s = 0.0;
    for (std::size_t i = j; i < j + p; ++i) s += u[i];
    c.knots.push_back(s / static_cast<double>(p));
  }
  c.knots.insert(c.knots.end(), p + 1, 1.0);
  c.control.assign(m, Vec3::Zero());

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  Eigen::MatrixXd B(static_cast<Eigen::Index>(m), 3);
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t span = find_span(c, u[k]);
    const auto N = basis_functions(c.knots, c.degree, span, u[k]);
    for (std::size_t i = 0; i <= p; ++i) {
      A(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(span - p + i)) = N[i];
    }
    B.row(static_cast<Eigen::Index>(k)) = points[k].transpose();
  }
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  if (!(lu.rcond() > 1e-12)) return polyline(points, u);
  const Eigen::MatrixXd X = lu.solve(B);
  if (!X.allFinite()) return polyline(points, u);
  for (std::size_t i = 0; i < m; ++i) c.control[i] = X.row(static_cast<Eigen::Index>(i)).transpose();
  // The clamped ends interpolate exactly; pin them against round-off.
  c.control.front() = points.front();
  c.control.back() = points.back();
  return fit;
}

PointCloud sample_curve(const BSplineCurve& curve, int n) {
  if (n < 2) throw Error(ErrorCode::ContractViolation, "sample count must be >= 2");
  PointCloud out;
  const double a = curve.u_min(), b = curve.u_max();
  for (int i = 0; i < n; ++i) {
    const double u = i == n - 1 ? b : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    out.points.push_back(curve.evaluate(u));
  }
  return out;
}

void write_spline_json(const std::filesystem::path& path, const BSplineCurve& curve) {
  nlohmann::json j;
  j["degree"] = curve.degree;
  j["knots"] = curve.knots;
  j["control_points"] = nlohmann::json::array();
  for (const auto& p : curve.control) j["control_points"].push_back({p.x(), p.y(), p.z()});
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

BSplineCurve read_spline_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  try {
    const auto j = nlohmann::json::parse(in);
    BSplineCurve c;
    c.degree = j.at("degree").get<int>();
    c.knots = j.at("knots").get<std::vector<double>>();
    for (const auto& p : j.at("control_points")) {
      c.control.emplace_back(p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>());
    }
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Io, path.string() + ": " + e.what());
  }
}

}  // namespace dlo
