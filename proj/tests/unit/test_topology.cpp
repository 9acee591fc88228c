#include <algorithm>
#include <numeric>
#include <set>

#include "doctest.h"
#include "dlo/topology.hpp"
#include "oracles.hpp"

using namespace dlo;
using test::in_order_up_to_reversal;
using test::random_smooth_curve;
using test::walk_order;

namespace {

const PlaneModel kFloor = PlaneModel::from_point_normal(Vec3::Zero(), Vec3::UnitZ());

void check_partition(const SortedPolyline& poly) {
  std::vector<int> seen(poly.cloud.size(), 0);
  for (const auto& seg : poly.segments) {
    CHECK(!seg.empty());
    for (auto i : seg) ++seen.at(i);
  }
  for (int s : seen) CHECK(s == 1);
  REQUIRE(poly.endpoints.size() == 2 * poly.segments.size());
  for (std::size_t s = 0; s < poly.segments.size(); ++s) {
    CHECK(poly.endpoints[2 * s].position == poly.cloud[poly.segments[s].front()]);
    CHECK(poly.endpoints[2 * s + 1].position == poly.cloud[poly.segments[s].back()]);
  }
}

}  // namespace

TEST_SUITE("topology") {
  TEST_CASE("five shuffled collinear points sort into one segment") {
    std::vector<Vec3> line;
    for (int i = 0; i < 5; ++i) line.emplace_back(0.02 * i, 0.01 * i, 0.0);
    PointCloud c;
    c.points = {line[3], line[0], line[4], line[1], line[2]};
    const SortedPolyline poly = sort_and_find_endpoints(c, kFloor);
    REQUIRE(poly.segment_count() == 1);
    check_partition(poly);
    CHECK(in_order_up_to_reversal(walk_order(poly, line)));
    std::set<std::pair<double, double>> ends;
    for (const auto& e : poly.endpoints) ends.insert({e.position.x(), e.position.y()});
    CHECK(ends == std::set<std::pair<double, double>>{{0.0, 0.0}, {0.08, 0.04}});
  }

  TEST_CASE("two parallel runs far apart give two segments") {
    PointCloud c;
    for (int i = 0; i < 8; ++i) {
      c.points.emplace_back(0.02 * i, 0.0, 0.0);
      c.points.emplace_back(0.02 * i, 0.5, 0.0);
    }
    const SortedPolyline poly = sort_and_find_endpoints(c, kFloor);
    CHECK(poly.segment_count() == 2);
    CHECK(poly.endpoints.size() == 4);
    check_partition(poly);
  }

  TEST_CASE("circle with one gap gives one open segment flanking the gap") {
    const double R = 0.15, r_search = 0.05, gap = 3 * r_search;
    const double span = 2 * kPi - gap / R;
    const int n = 40;  // spacing = span R / (n-1) ~ 0.021 < r_search
    std::vector<Vec3> arc;
    for (int i = 0; i < n; ++i) {
      const double t = gap / R / 2 + span * i / (n - 1);
      arc.emplace_back(R * std::cos(t), R * std::sin(t), 0.0);
    }
    PointCloud c;
    c.points = arc;
    Rng rng(3);
    for (std::size_t i = c.size() - 1; i > 0; --i) std::swap(c.points[i], c.points[rng.index(i + 1)]);
    const SortedPolyline poly = sort_and_find_endpoints(c, kFloor);
    REQUIRE(poly.segment_count() == 1);
    check_partition(poly);
    CHECK(in_order_up_to_reversal(walk_order(poly, arc)));
    for (const auto& e : poly.endpoints) CHECK(e.position.x() > 0.0);
  }

  TEST_CASE("property: shuffling the input does not change the result") {
    Rng rng(21);
    for (int t = 0; t < 20; ++t) {
      const auto curve = random_smooth_curve(rng, 0.05);
      PointCloud c;
      c.points = curve;
      c.points.emplace_back(5.0, 5.0, 0.0);  // an isolated extra segment
      const SortedPolyline ref = sort_and_find_endpoints(c, kFloor);
      for (int k = 0; k < 3; ++k) {
        for (std::size_t i = c.size() - 1; i > 0; --i) std::swap(c.points[i], c.points[rng.index(i + 1)]);
        const SortedPolyline again = sort_and_find_endpoints(c, kFloor);
        REQUIRE(again.segment_count() == ref.segment_count());
        for (std::size_t s = 0; s < ref.segment_count(); ++s) {
          CHECK(again.segment_cloud(s).points == ref.segment_cloud(s).points);
        }
      }
    }
  }

  TEST_CASE("property: 50 random smooth open curves sort in arc-length order") {
    Rng rng(77);
    for (int t = 0; t < 50; ++t) {
      CAPTURE(t);
      const auto curve = random_smooth_curve(rng, 0.05);
      PointCloud c;
      c.points = curve;
      for (std::size_t i = c.size() - 1; i > 0; --i) std::swap(c.points[i], c.points[rng.index(i + 1)]);
      const SortedPolyline poly = sort_and_find_endpoints(c, kFloor);
      REQUIRE(poly.segment_count() == 1);
      check_partition(poly);
      CHECK(in_order_up_to_reversal(walk_order(poly, curve)));
    }
  }

  TEST_CASE("sorting works in the frame of an inclined plane") {
    const PlaneModel tilted = PlaneModel::from_point_normal(Vec3(0, 0, 0.2), Vec3(0, -std::sin(deg2rad(15)), std::cos(deg2rad(15))));
    const PlaneBasis b(tilted);
    std::vector<Vec3> line;
    for (int i = 0; i < 10; ++i) line.push_back(b.to_3d(Vec2(0.02 * i, 0.005 * i * i * 0.1)));
    PointCloud c;
    c.points = line;
    std::reverse(c.points.begin(), c.points.end());
    const SortedPolyline poly = sort_and_find_endpoints(c, tilted);
    REQUIRE(poly.segment_count() == 1);
    CHECK(in_order_up_to_reversal(walk_order(poly, line)));
  }

  TEST_CASE("errors: empty cloud and off-plane points") {
    try {
      sort_and_find_endpoints(PointCloud{}, kFloor);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::EmptyInput);
    }
    PointCloud c;
    c.points = {Vec3(0, 0, 0), Vec3(0.01, 0, 0.001)};
    CHECK_THROWS_AS(sort_and_find_endpoints(c, kFloor), Error);
  }

  TEST_CASE("previous_point") {
    PointCloud c;
    c.points = {Vec3(0, 0, 0), Vec3(0.02, 0, 0), Vec3(0.04, 0, 0), Vec3(1, 1, 0)};
    const SortedPolyline poly = sort_and_find_endpoints(c, kFloor);
    REQUIRE(poly.segment_count() == 2);
    for (const auto& e : poly.endpoints) {
      const auto& seg = poly.segments[e.segment];
      if (seg.size() == 3) {
        CHECK((previous_point(poly, e) - Vec3(0.02, 0, 0)).norm() < 1e-15);
      } else {
        try {
          previous_point(poly, e);
          FAIL("expected an error");
        } catch (const Error& err) {
          CHECK(err.code() == ErrorCode::NoDirection);
        }
      }
    }
  }

  TEST_CASE("a tight loop is split where the turn exceeds alpha_max") {
    // Hairpin: two parallel lines 2 cm apart joined by a sharp 180-degree
    // corner over two points; the walk cannot turn more than 75 degrees.
    PointCloud c;
    for (int i = 0; i < 6; ++i) c.points.emplace_back(0.02 * i, 0.0, 0.0);
    for (int i = 0; i < 6; ++i) c.points.emplace_back(0.02 * i, 0.06, 0.0);
    SortOptions opt;
    opt.r_search = 0.03;
    const SortedPolyline poly = sort_and_find_endpoints(c, kFloor, opt);
    CHECK(poly.segment_count() == 2);
  }

  TEST_CASE("sorted CSV round-trip") {
    test::TempDir dir("sorted");
    PointCloud c;
    for (int i = 0; i < 6; ++i) c.points.emplace_back(0.02 * i, 0.001 * i, 0.0);
    c.points.emplace_back(2.0, 0.0, 0.0);
    const SortedPolyline poly = sort_and_find_endpoints(c, kFloor);
    write_sorted_csv(dir.path() / "s.csv", poly);
    const SortedPolyline back = read_sorted_csv(dir.path() / "s.csv");
    REQUIRE(back.segment_count() == poly.segment_count());
    for (std::size_t s = 0; s < poly.segment_count(); ++s) {
      const auto a = poly.segment_cloud(s), b = back.segment_cloud(s);
      REQUIRE(a.size() == b.size());
      for (std::size_t i = 0; i < a.size(); ++i) CHECK((a[i] - b[i]).norm() < 1e-9);
    }
    CHECK(back.endpoints.size() == poly.endpoints.size());
  }
}
