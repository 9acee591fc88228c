#include <cstring>
#include <vector>

#include "doctest.h"
#include "dlo/rng.hpp"
#include "dlo/simd/kernels.hpp"

using namespace dlo;

namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

struct Data {
  std::vector<double> x, y, z;
};

Data make_data(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Data d;
  for (std::size_t i = 0; i < n; ++i) {
    d.x.push_back(rng.uniform(-1, 1));
    d.y.push_back(rng.uniform(-1, 1));
    d.z.push_back(rng.uniform(-1, 1));
  }
  return d;
}

}  // namespace

TEST_SUITE("simd") {
  TEST_CASE("scalar table is always available and first") {
    const auto tables = simd::available_kernels();
    REQUIRE(!tables.empty());
    CHECK(tables.front()->isa == simd::Isa::Scalar);
    MESSAGE("dispatched kernels: " << simd::to_string(simd::kernels().isa));
  }

  TEST_CASE("every variant is bit-identical to the scalar reference") {
    const auto& ref = simd::scalar_kernels();
    for (const auto* k : simd::available_kernels()) {
      CAPTURE(simd::to_string(k->isa));
      for (std::size_t n : {1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 16u, 31u, 100u, 1001u}) {
        CAPTURE(n);
        const Data d = make_data(n, n * 7 + 1);
        const double q[3] = {0.1, -0.2, 0.3};
        std::vector<double> a(n), b(n);
        ref.sq_dist3(q, d.x.data(), d.y.data(), d.z.data(), n, a.data());
        k->sq_dist3(q, d.x.data(), d.y.data(), d.z.data(), n, b.data());
        for (std::size_t i = 0; i < n; ++i) REQUIRE(same_bits(a[i], b[i]));

        const auto na = ref.nearest3(q, d.x.data(), d.y.data(), d.z.data(), n);
        const auto nb = k->nearest3(q, d.x.data(), d.y.data(), d.z.data(), n);
        CHECK(na.index == nb.index);
        CHECK(same_bits(na.sq_dist, nb.sq_dist));

        const double coef[4] = {0.0, 0.6, 0.8, -0.1};
        for (double tol : {0.0, 0.05, 0.3, 2.0}) {
          CHECK(ref.count_plane_inliers(coef, d.x.data(), d.y.data(), d.z.data(), n, tol) ==
                k->count_plane_inliers(coef, d.x.data(), d.y.data(), d.z.data(), n, tol));
        }

        const double q5[5] = {0.5, -0.5, 0.25, 0.0, 1.0};
        const Data e = make_data(n, n + 99);
        const double* cols[5] = {d.x.data(), d.y.data(), d.z.data(), e.x.data(), e.y.data()};
        for (std::size_t dims : {1u, 3u, 5u}) {
          ref.sq_dist_nd(q5, cols, dims, n, a.data());
          k->sq_dist_nd(q5, cols, dims, n, b.data());
          for (std::size_t i = 0; i < n; ++i) REQUIRE(same_bits(a[i], b[i]));
        }
      }
    }
  }

  TEST_CASE("nearest3 keeps the lowest index on ties") {
    for (const auto* k : simd::available_kernels()) {
      std::vector<double> x(13, 1.0), y(13, 0.0), z(13, 0.0);
      x[5] = 0.5;
      x[9] = 0.5;
      x[12] = 0.5;
      const double q[3] = {0.0, 0.0, 0.0};
      const auto r = k->nearest3(q, x.data(), y.data(), z.data(), x.size());
      CHECK(r.index == 5);
      CHECK(r.sq_dist == 0.25);
    }
  }
}
