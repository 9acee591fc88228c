#include "dlo/geom.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <sstream>

namespace dlo {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ContractViolation: return "contract violation";
    case ErrorCode::DegenerateFrame: return "degenerate frame";
    case ErrorCode::DegenerateGeometry: return "degenerate geometry";
    case ErrorCode::DegenerateInput: return "degenerate input";
    case ErrorCode::Dimension: return "dimension mismatch";
    case ErrorCode::EmptyInput: return "empty input";
    case ErrorCode::EmptyContact: return "empty contact";
    case ErrorCode::InsufficientDepth: return "insufficient depth";
    case ErrorCode::NoDirection: return "no direction";
    case ErrorCode::InvalidView: return "invalid view";
    case ErrorCode::DescentOverrun: return "descent overrun";
    case ErrorCode::BudgetExhausted: return "probe budget exhausted";
    case ErrorCode::Io: return "i/o";
    case ErrorCode::Config: return "config";
  }
  return "unknown";
}

namespace {
constexpr double kRotationTol = 1e-9;
}

Rotation3::Rotation3(const Mat3& m) : m_(m) {
  if (!m.allFinite() || orthonormality_error() > kRotationTol) {
    std::ostringstream os;
    os << "matrix is not a proper rotation (error " << orthonormality_error() << ")";
    throw Error(ErrorCode::ContractViolation, os.str());
  }
}

Rotation3 Rotation3::operator*(const Rotation3& other) const {
  return Rotation3(m_ * other.m_, Unchecked{});
}

Rotation3 Rotation3::transpose() const { return Rotation3(m_.transpose(), Unchecked{}); }

double Rotation3::orthonormality_error() const {
  const double ortho = (m_.transpose() * m_ - Mat3::Identity()).cwiseAbs().maxCoeff();
  return std::max(ortho, std::abs(m_.determinant() - 1.0));
}

Pose Pose::inverse() const {
  const Rotation3 rt = rotation.transpose();
  return Pose{rt, -(rt * translation)};
}

Pose Pose::operator*(const Pose& other) const {
  return Pose{rotation * other.rotation, rotation * other.translation + translation};
}

Rotation3 rotation_about_axis(const Vec3& axis, double angle_deg) {
  if (!axis.allFinite() || std::abs(axis.norm() - 1.0) > 1e-9) {
    throw Error(ErrorCode::ContractViolation, "rotation axis must be unit-norm");
  }
  const double a = deg2rad(angle_deg);
  const double c = std::cos(a);
  const double s = std::sin(a);
  Mat3 k;
  k << 0.0, -axis.z(), axis.y(),
       axis.z(), 0.0, -axis.x(),
       -axis.y(), axis.x(), 0.0;
  const Mat3 r = Mat3::Identity() + s * k + (1.0 - c) * (k * k);
  return Rotation3(r);
}

Rotation3 frame_from_y_z(const Vec3& y_dir, const Vec3& z_dir) {
  const double yn = y_dir.norm();
  const double zn = z_dir.norm();
  if (!(yn > 0.0) || !(zn > 0.0) || !y_dir.allFinite() || !z_dir.allFinite()) {
    throw Error(ErrorCode::DegenerateFrame, "zero or non-finite direction");
  }
  const Vec3 z = z_dir / zn;
  const Vec3 yu = y_dir / yn;
  // Reject inputs within 1 degree of parallel.
  if (yu.cross(z).norm() <= std::sin(deg2rad(1.0))) {
    throw Error(ErrorCode::DegenerateFrame, "y and z directions are nearly parallel");
  }
  const Vec3 y = (yu - yu.dot(z) * z).normalized();
  const Vec3 x = y.cross(z);
  Mat3 m;
  m.col(0) = x;
  m.col(1) = y;
  m.col(2) = z;
  return Rotation3(m);
}

void ReconParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::Config, std::string(name) + " must be strictly positive");
    }
  };
  positive(d_min, "d_min");
  positive(d_m, "d_m");
  positive(t_P, "t_P");
  positive(t_H, "t_H");
  positive(delta_y, "delta_y");
  positive(delta_z, "delta_z");
  positive(theta_deg, "theta");
  positive(r_search, "r_search");
  positive(alpha_max_deg, "alpha_max");
  positive(eps_contact, "eps_contact");
  positive(hover_height, "hover_height");
  positive(max_descent, "max_descent");
  positive(ransac_inlier_tol, "ransac_inlier_tol");
  positive(spatial_weight, "spatial_weight");
  positive(cluster_cut, "cluster_cut");
  if (max_rotation_attempts <= 0 || probe_budget <= 0 || ransac_max_iters <= 0 ||
      shelf_stride <= 0 || min_cluster_size <= 0 || spline_samples < 2 ||
      spline_degree < 1) {
    throw Error(ErrorCode::Config, "count parameters must be positive");
  }
  if (!voxel_origin.allFinite()) throw Error(ErrorCode::Config, "voxel origin must be finite");
  // When the attempt budget is meant to cover a full turn, theta must divide 360.
  const double steps = 360.0 / theta_deg;
  if (std::abs(steps - max_rotation_attempts) < 0.5 &&
      std::abs(steps - std::round(steps)) > 1e-9) {
    throw Error(ErrorCode::Config, "theta must divide 360 when rotating a full turn");
  }
}

}  // namespace dlo
