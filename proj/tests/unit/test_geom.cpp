#include "doctest.h"
#include "dlo/geom.hpp"
#include "test_util.hpp"

using namespace dlo;

TEST_SUITE("geom") {
  TEST_CASE("rotation about z: zero angle and quarter turn") {
    CHECK(rotation_about_axis(Vec3::UnitZ(), 0.0).matrix().isApprox(Mat3::Identity(), 1e-15));
    const Vec3 v = rotation_about_axis(Vec3::UnitZ(), 90.0) * Vec3::UnitX();
    CHECK((v - Vec3::UnitY()).norm() < 1e-15);
  }

  TEST_CASE("24 steps of 15 degrees compose to the identity") {
    const Rotation3 step = rotation_about_axis(Vec3::UnitZ(), 15.0);
    Rotation3 acc;
    for (int i = 0; i < 24; ++i) acc = acc * step;
    CHECK((acc.matrix() - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
  }

  TEST_CASE("360/theta steps about random axes return to the identity") {
    Rng rng(3);
    for (double theta : {1.0, 5.0, 15.0, 30.0, 45.0, 90.0}) {
      const Rotation3 step = rotation_about_axis(test::random_unit(rng), theta);
      Rotation3 acc;
      for (int i = 0; i < static_cast<int>(360.0 / theta); ++i) acc = acc * step;
      CHECK((acc.matrix() - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
    }
  }

  TEST_CASE("non-unit axis is a contract violation") {
    try {
      rotation_about_axis(Vec3(0, 0, 2), 10.0);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ContractViolation);
    }
  }

  TEST_CASE("frame_from_y_z examples") {
    const Rotation3 a = frame_from_y_z(Vec3::UnitY(), Vec3::UnitZ());
    CHECK(a.matrix().isApprox(Mat3::Identity(), 1e-15));

    const Rotation3 b = frame_from_y_z(Vec3(0, 1, 0.5), Vec3::UnitZ());
    CHECK((b.y_axis() - Vec3::UnitY()).norm() < 1e-15);

    const Rotation3 c = frame_from_y_z(Vec3(1, 1, 0) / std::sqrt(2.0), Vec3::UnitZ());
    CHECK((c.x_axis() - Vec3(1, -1, 0) / std::sqrt(2.0)).norm() < 1e-15);
  }

  TEST_CASE("frame_from_y_z rejects near-parallel inputs") {
    for (const Vec3& y : {Vec3(0, 0, 1), Vec3(0, 0, -3), Vec3(0.01, 0, 1)}) {
      try {
        frame_from_y_z(y, Vec3::UnitZ());
        FAIL("expected an error");
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DegenerateFrame);
      }
    }
  }

  TEST_CASE("property: every produced rotation is proper and orthonormal") {
    Rng rng(11);
    for (int i = 0; i < 500; ++i) {
      const Rotation3 r = test::random_rotation(rng);
      CHECK(r.orthonormality_error() < 1e-9);
      Vec3 y = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
      const Vec3 z = test::random_unit(rng);
      if (y.normalized().cross(z).norm() < 0.05) continue;
      const Rotation3 f = frame_from_y_z(y, z);
      CHECK(f.orthonormality_error() < 1e-9);
      CHECK(f.x_axis().isApprox(f.y_axis().cross(f.z_axis()), 1e-12));
    }
  }

  TEST_CASE("property: frame_from_y_z is invariant to input magnitudes") {
    Rng rng(12);
    for (int i = 0; i < 200; ++i) {
      const Vec3 y(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
      const Vec3 z = test::random_unit(rng);
      if (y.normalized().cross(z).norm() < 0.05) continue;
      const Mat3 ref = frame_from_y_z(y, z).matrix();
      const double sy = std::exp(rng.uniform(-5, 5)), sz = std::exp(rng.uniform(-5, 5));
      CHECK((frame_from_y_z(sy * y, sz * z).matrix() - ref).cwiseAbs().maxCoeff() < 1e-12);
    }
  }

  TEST_CASE("pose inverse and composition") {
    Rng rng(5);
    for (int i = 0; i < 50; ++i) {
      Pose p{test::random_rotation(rng), Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1))};
      const Vec3 v(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
      CHECK((p.inverse().apply(p.apply(v)) - v).norm() < 1e-12);
      CHECK(((p * p.inverse()).apply(v) - v).norm() < 1e-12);
    }
  }

  TEST_CASE("reference parameter defaults") {
    const ReconParams p;
    CHECK(p.d_min == 0.0150);
    CHECK(p.d_m == 0.0200);
    CHECK(p.t_P == 0.0080);
    CHECK(p.t_H == 0.0011);
    CHECK(p.delta_y == 0.0100);
    CHECK(p.delta_z == 0.0015);
    CHECK(p.theta_deg == 15.0);
    CHECK(p.max_rotation_attempts * p.theta_deg == 360.0);
    CHECK_NOTHROW(p.validate());
  }

  TEST_CASE("parameter validation rejects non-positive values") {
    ReconParams p;
    p.d_m = 0.0;
    CHECK_THROWS_AS(p.validate(), Error);
    ReconParams q;
    q.theta_deg = -1.0;
    CHECK_THROWS_AS(q.validate(), Error);
  }
}
