#include <set>
#include <tuple>

#include "doctest.h"
#include "dlo/cloudproc.hpp"
#include "oracles.hpp"

using namespace dlo;

namespace {

PointCloud random_cloud(Rng& rng, std::size_t n, double half) {
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) {
    c.points.emplace_back(rng.uniform(-half, half), rng.uniform(-half, half), rng.uniform(-half, half));
  }
  return c;
}

}  // namespace

TEST_SUITE("cloudproc") {
  TEST_CASE("ransac: exact plane z = 1") {
    Rng rng(1);
    PointCloud c;
    for (int i = 0; i < 100; ++i) c.points.emplace_back(rng.uniform(-1, 1), rng.uniform(-1, 1), 1.0);
    const PlaneModel p = ransac_plane(c, 0.003, 500, 0);
    CHECK(std::abs(std::abs(p.normal.z()) - 1.0) < 1e-12);
    CHECK(std::abs(std::abs(p.d) - 1.0) < 1e-12);
    CHECK(p.inlier_count == 100);
  }

  TEST_CASE("ransac: minimal sample") {
    PointCloud c;
    c.points = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 1)};
    const PlaneModel p = ransac_plane(c, 1e-6, 50, 4);
    CHECK(p.inlier_count == 3);
    for (const auto& q : c.points) CHECK(std::abs(p.signed_distance(q)) < 1e-12);
  }

  TEST_CASE("ransac: normal within 1 degree under 20% outliers, 50 seeds") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      CAPTURE(seed);
      const PointCloud c = test::plane_with_outliers(seed);
      const PlaneModel p = ransac_plane(c, 0.002, 500, seed);
      CHECK(test::axis_angle_deg(p.normal, Vec3::UnitZ()) < 1.0);
      CHECK(p.inlier_count >= 400);
    }
  }

  TEST_CASE("ransac: normal faces the viewpoint") {
    Rng rng(2);
    PointCloud c;
    for (int i = 0; i < 50; ++i) c.points.emplace_back(rng.uniform(-1, 1), rng.uniform(-1, 1), 0.0);
    CHECK(ransac_plane(c, 0.003, 100, 1, Vec3(0, 0, 5)).normal.z() > 0.99);
    CHECK(ransac_plane(c, 0.003, 100, 1, Vec3(0, 0, -5)).normal.z() < -0.99);
  }

  TEST_CASE("ransac: collinear input is degenerate") {
    PointCloud c;
    for (int i = 0; i < 20; ++i) c.points.emplace_back(0.1 * i, 0.2 * i, 0.0);
    try {
      ransac_plane(c, 0.003, 100, 0);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DegenerateGeometry);
    }
  }

  TEST_CASE("property: ransac is bit-reproducible for a fixed seed") {
    Rng rng(8);
    const PointCloud c = random_cloud(rng, 300, 0.5);
    const PlaneModel a = ransac_plane(c, 0.05, 200, 77), b = ransac_plane(c, 0.05, 200, 77);
    CHECK(a.normal == b.normal);
    CHECK(a.d == b.d);
    CHECK(a.inlier_count == b.inlier_count);
  }

  TEST_CASE("voxel_downsample examples") {
    PointCloud one;
    one.points = {Vec3(0.013, -0.2, 0.5)};
    CHECK(voxel_downsample(one, 0.02).points == one.points);

    PointCloud two;
    two.points = {Vec3(0, 0, 0), Vec3(0.004, 0, 0)};
    const PointCloud a = voxel_downsample(two, 0.02);
    REQUIRE(a.size() == 1);
    CHECK((a[0] - Vec3(0.002, 0, 0)).norm() < 1e-15);

    two.points[1] = Vec3(0.025, 0, 0);
    CHECK(voxel_downsample(two, 0.02).size() == 2);
  }

  TEST_CASE("voxel_downsample respects the grid origin") {
    PointCloud c;
    c.points = {Vec3(0.009, 0, 0), Vec3(0.011, 0, 0)};
    CHECK(voxel_downsample(c, 0.02).size() == 1);
    CHECK(voxel_downsample(c, 0.02, Vec3(0.01, 0, 0)).size() == 2);
  }

  TEST_CASE("property: voxel output is no larger and one point per occupied voxel") {
    Rng rng(4);
    for (int t = 0; t < 20; ++t) {
      const PointCloud c = random_cloud(rng, 500, 0.1);
      const Vec3 origin(rng.uniform(-0.01, 0.01), rng.uniform(-0.01, 0.01), 0.0);
      const PointCloud d = voxel_downsample(c, 0.02, origin);
      CHECK(d.size() <= c.size());
      std::set<std::tuple<long, long, long>> in, out;
      auto key = [&](const Vec3& p) {
        const Vec3 k = ((p - origin) / 0.02).array().floor();
        return std::make_tuple(static_cast<long>(k.x()), static_cast<long>(k.y()), static_cast<long>(k.z()));
      };
      for (const auto& p : c.points) in.insert(key(p));
      for (const auto& p : d.points) CHECK(out.insert(key(p)).second);
      CHECK(in == out);
      CHECK(voxel_downsample(c, 0.02, origin).points == d.points);
    }
  }

  TEST_CASE("merge_close_points examples") {
    PointCloud c;
    c.points = {Vec3(0, 0, 0), Vec3(0.005, 0, 0)};
    PointCloud m = merge_close_points(c, 0.008);
    REQUIRE(m.size() == 1);
    CHECK((m[0] - Vec3(0.0025, 0, 0)).norm() < 1e-15);

    c.points = {Vec3(0, 0, 0), Vec3(0.009, 0, 0)};
    CHECK(merge_close_points(c, 0.008).size() == 2);

    // 0, 5, 10 mm: (0,5) -> 2.5, then (2.5,10) is 7.5 mm apart -> 6.25.
    c.points = {Vec3(0.010, 0, 0), Vec3(0, 0, 0), Vec3(0.005, 0, 0)};
    m = merge_close_points(c, 0.008);
    REQUIRE(m.size() == 1);
    CHECK(std::abs(m[0].x() - 0.00625) < 1e-15);
  }

  TEST_CASE("property: merged clouds keep every pair at least t_P apart") {
    Rng rng(6);
    for (int t = 0; t < 30; ++t) {
      const PointCloud c = random_cloud(rng, 40 + 10 * static_cast<std::size_t>(t % 5), 0.03);
      const PointCloud m = merge_close_points(c, 0.008);
      CHECK(m.size() <= c.size());
      for (std::size_t i = 0; i < m.size(); ++i) {
        for (std::size_t j = i + 1; j < m.size(); ++j) CHECK((m[i] - m[j]).norm() >= 0.008);
      }
      // Input order does not matter.
      PointCloud shuffled = c;
      std::reverse(shuffled.points.begin(), shuffled.points.end());
      CHECK(merge_close_points(shuffled, 0.008).points == m.points);
    }
  }

  TEST_CASE("project_to_plane examples") {
    const PlaneModel z0 = PlaneModel::from_point_normal(Vec3::Zero(), Vec3::UnitZ());
    const PlaneModel z1 = PlaneModel::from_point_normal(Vec3(0, 0, 1), Vec3::UnitZ());
    PointCloud c;
    c.points = {Vec3(0.3, 0.2, 0.0)};
    CHECK(project_to_plane(c, z0).points == c.points);
    c.points = {Vec3(0, 0, 1)};
    CHECK((project_to_plane(c, z0)[0] - Vec3::Zero()).norm() < 1e-15);
    c.points = {Vec3(1, 2, 3)};
    CHECK((project_to_plane(c, z1)[0] - Vec3(1, 2, 1)).norm() < 1e-15);
  }

  TEST_CASE("property: projection lands on the plane, is idempotent and distance-reducing") {
    Rng rng(10);
    for (int t = 0; t < 20; ++t) {
      const PlaneModel pl = PlaneModel::from_point_normal(Vec3(rng.uniform(-1, 1), 0, rng.uniform(-1, 1)), test::random_unit(rng));
      const PointCloud c = random_cloud(rng, 60, 1.0);
      const PointCloud p = project_to_plane(c, pl);
      const PointCloud pp = project_to_plane(p, pl);
      for (std::size_t i = 0; i < p.size(); ++i) {
        CHECK(std::abs(pl.signed_distance(p[i])) < 1e-9);
        CHECK((pp[i] - p[i]).norm() < 1e-12);
        for (std::size_t j = 0; j < i; ++j) CHECK((p[i] - p[j]).norm() <= (c[i] - c[j]).norm() + 1e-12);
      }
    }
  }

  TEST_CASE("PLY and CSV round-trip at 9 significant digits") {
    test::TempDir dir("cloud");
    PointCloud c;
    c.points = {Vec3(0.123456789, -1.5, 2e-7), Vec3(100.5, 0.0, -0.000123456789)};
    write_ply(dir.path() / "a.ply", c);
    write_csv(dir.path() / "a.csv", c);
    const PointCloud a = read_ply(dir.path() / "a.ply"), b = read_csv(dir.path() / "a.csv");
    REQUIRE(a.size() == 2);
    REQUIRE(b.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
      for (int k = 0; k < 3; ++k) {
        const double tol = 1e-8 * std::max(1.0, std::abs(c[i][k]));
        CHECK(std::abs(a[i][k] - c[i][k]) <= tol);
        CHECK(a[i][k] == b[i][k]);
      }
    }
    // Writing what was read reproduces the file.
    write_ply(dir.path() / "b.ply", a);
    CHECK(test::TempDir::slurp(dir.path() / "a.ply") == test::TempDir::slurp(dir.path() / "b.ply"));
  }

  TEST_CASE("plane basis is orthonormal and round-trips") {
    Rng rng(13);
    for (int t = 0; t < 20; ++t) {
      const PlaneModel pl = PlaneModel::from_point_normal(Vec3(0.1, 0.2, 0.3), test::random_unit(rng));
      const PlaneBasis b(pl);
      CHECK(std::abs(b.e1.dot(b.e2)) < 1e-12);
      CHECK((b.e1.cross(b.e2) - pl.normal).norm() < 1e-12);
      const Vec2 uv(rng.uniform(-1, 1), rng.uniform(-1, 1));
      CHECK((b.to_2d(b.to_3d(uv)) - uv).norm() < 1e-12);
    }
  }
}
