#include <cmath>

#include "dlo/simd/kernels.hpp"
#include "kernels_internal.hpp"

namespace dlo::simd::scalar {

void sq_dist3(const double* q, const double* x, const double* y, const double* z,
              std::size_t n, double* out) {
  const double qx = q[0], qy = q[1], qz = q[2];
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = qx - x[i];
    const double dy = qy - y[i];
    const double dz = qz - z[i];
    out[i] = dx * dx + dy * dy + dz * dz;
  }
}

Nearest nearest3(const double* q, const double* x, const double* y, const double* z,
                 std::size_t n) {
  const double qx = q[0], qy = q[1], qz = q[2];
  Nearest best{0, INFINITY};
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = qx - x[i];
    const double dy = qy - y[i];
    const double dz = qz - z[i];
    const double d = dx * dx + dy * dy + dz * dz;
    if (d < best.sq_dist) best = {i, d};
  }
  return best;
}

std::size_t count_plane_inliers(const double* coef, const double* x, const double* y,
                                const double* z, std::size_t n, double tol) {
  const double a = coef[0], b = coef[1], c = coef[2], d = coef[3];
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = a * x[i] + b * y[i] + c * z[i] + d;
    count += std::fabs(r) <= tol ? 1 : 0;
  }
  return count;
}

void sq_dist_nd(const double* q, const double* const* cols, std::size_t dims, std::size_t n,
                double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = 0.0;
  for (std::size_t k = 0; k < dims; ++k) {
    const double qk = q[k];
    const double* col = cols[k];
    for (std::size_t i = 0; i < n; ++i) {
      const double d = qk - col[i];
      out[i] = out[i] + d * d;
    }
  }
}

}  // namespace dlo::simd::scalar
