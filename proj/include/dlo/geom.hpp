#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>

#include "dlo/error.hpp"

// Shared geometric primitives. Everything lives in one right-handed, z-up
// base frame; angles cross the public API in degrees.
namespace dlo {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Proper rotation. Columns are the end-effector x, y, z axes expressed in
/// the base frame. Construction checks orthonormality and det = +1.
class Rotation3 {
 public:
  Rotation3() : m_(Mat3::Identity()) {}
  explicit Rotation3(const Mat3& m);

  static Rotation3 identity() { return Rotation3(); }

  const Mat3& matrix() const { return m_; }
  Vec3 x_axis() const { return m_.col(0); }
  Vec3 y_axis() const { return m_.col(1); }
  Vec3 z_axis() const { return m_.col(2); }

  Vec3 operator*(const Vec3& v) const { return m_ * v; }
  Rotation3 operator*(const Rotation3& other) const;
  Rotation3 transpose() const;

  /// Max deviation of RᵀR from I, and |det R − 1|.
  double orthonormality_error() const;

 private:
  struct Unchecked {};
  Rotation3(const Mat3& m, Unchecked) : m_(m) {}
  Mat3 m_;
};

struct Pose {
  Rotation3 rotation;
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Pose inverse() const;
  Pose operator*(const Pose& other) const;
};

/// Rodrigues rotation about a unit axis. Throws ContractViolation if the axis
/// is not unit-norm within 1e-9.
Rotation3 rotation_about_axis(const Vec3& axis, double angle_deg);

/// Frame whose z column is normalize(z_dir) and whose y column is y_dir with
/// its z component removed (Gram-Schmidt, z trusted). x = y × z.
/// Throws DegenerateFrame when the inputs are within 1° of parallel.
Rotation3 frame_from_y_z(const Vec3& y_dir, const Vec3& z_dir);

/// Reconstruction parameters. The first block carries the reference
/// defaults; the rest are implementation knobs.
struct ReconParams {
  double d_min = 0.0150;   // m, exploration stop distance to an endpoint
  double d_m = 0.0200;     // m, voxel edge
  double t_P = 0.0080;     // m, near-point merge threshold
  double t_H = 0.0011;     // indicator threshold
  double delta_y = 0.0100; // m, exploration step along the cable
  double delta_z = 0.0015; // m, descent step
  double theta_deg = 15.0; // rotation step when a contact is rejected

  double r_search = 0.05;      // m
  double alpha_max_deg = 75.0;
  int max_rotation_attempts = 24;
  double eps_contact = 0.05;   // pressure units
  Vec3 voxel_origin = Vec3::Zero();

  double hover_height = 0.02;  // m above the plane before descent
  double max_descent = 0.006;  // m below the plane before a descent overrun
  int probe_budget = 10000;

  double ransac_inlier_tol = 0.003;
  int ransac_max_iters = 500;
  int shelf_stride = 2;        // pixel stride when sampling the shelf mask

  int min_cluster_size = 10;
  double spatial_weight = 0.5; // feature units per pixel
  double cluster_cut = 60.0;   // MST edges longer than this are cut

  int spline_degree = 3;
  int spline_samples = 200;

  /// Throws Config when a value is out of range.
  void validate() const;
};

}  // namespace dlo
