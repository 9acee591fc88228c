#include "kernels_internal.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>

namespace dlo::simd::avx2 {

void sq_dist3(const double* q, const double* x, const double* y, const double* z,
              std::size_t n, double* out) {
  const __m256d qx = _mm256_set1_pd(q[0]);
  const __m256d qy = _mm256_set1_pd(q[1]);
  const __m256d qz = _mm256_set1_pd(q[2]);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d dx = _mm256_sub_pd(qx, _mm256_loadu_pd(x + i));
    const __m256d dy = _mm256_sub_pd(qy, _mm256_loadu_pd(y + i));
    const __m256d dz = _mm256_sub_pd(qz, _mm256_loadu_pd(z + i));
    __m256d acc = _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(dz, dz));
    _mm256_storeu_pd(out + i, acc);
  }
  if (i < n) scalar::sq_dist3(q, x + i, y + i, z + i, n - i, out + i);
}

Nearest nearest3(const double* q, const double* x, const double* y, const double* z,
                 std::size_t n) {
  // Lane-wise distances in blocks, reduced in index order so the first
  // minimum wins exactly as in the scalar loop.
  alignas(32) double block[4];
  const __m256d qx = _mm256_set1_pd(q[0]);
  const __m256d qy = _mm256_set1_pd(q[1]);
  const __m256d qz = _mm256_set1_pd(q[2]);
  Nearest best{0, INFINITY};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d dx = _mm256_sub_pd(qx, _mm256_loadu_pd(x + i));
    const __m256d dy = _mm256_sub_pd(qy, _mm256_loadu_pd(y + i));
    const __m256d dz = _mm256_sub_pd(qz, _mm256_loadu_pd(z + i));
    __m256d acc = _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(dz, dz));
    // Skip the block unless some lane can beat the current best.
    const __m256d lt = _mm256_cmp_pd(acc, _mm256_set1_pd(best.sq_dist), _CMP_LT_OQ);
    if (_mm256_movemask_pd(lt) == 0) continue;
    _mm256_store_pd(block, acc);
    for (std::size_t k = 0; k < 4; ++k) {
      if (block[k] < best.sq_dist) best = {i + k, block[k]};
    }
  }
  if (i < n) {
    const Nearest tail = scalar::nearest3(q, x + i, y + i, z + i, n - i);
    if (tail.sq_dist < best.sq_dist) best = {i + tail.index, tail.sq_dist};
  }
  return best;
}

std::size_t count_plane_inliers(const double* coef, const double* x, const double* y,
                                const double* z, std::size_t n, double tol) {
  const __m256d a = _mm256_set1_pd(coef[0]);
  const __m256d b = _mm256_set1_pd(coef[1]);
  const __m256d c = _mm256_set1_pd(coef[2]);
  const __m256d d = _mm256_set1_pd(coef[3]);
  const __m256d vtol = _mm256_set1_pd(tol);
  const __m256d sign = _mm256_set1_pd(-0.0);
  std::size_t count = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d r = _mm256_add_pd(_mm256_mul_pd(a, _mm256_loadu_pd(x + i)),
                              _mm256_mul_pd(b, _mm256_loadu_pd(y + i)));
    r = _mm256_add_pd(r, _mm256_mul_pd(c, _mm256_loadu_pd(z + i)));
    r = _mm256_add_pd(r, d);
    const __m256d mag = _mm256_andnot_pd(sign, r);
    const int mask = _mm256_movemask_pd(_mm256_cmp_pd(mag, vtol, _CMP_LE_OQ));
    count += static_cast<std::size_t>(__builtin_popcount(static_cast<unsigned>(mask)));
  }
  if (i < n) count += scalar::count_plane_inliers(coef, x + i, y + i, z + i, n - i, tol);
  return count;
}

void sq_dist_nd(const double* q, const double* const* cols, std::size_t dims, std::size_t n,
                double* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t k = 0; k < dims; ++k) {
      const __m256d diff = _mm256_sub_pd(_mm256_set1_pd(q[k]), _mm256_loadu_pd(cols[k] + i));
      acc = _mm256_add_pd(acc, _mm256_mul_pd(diff, diff));
    }
    _mm256_storeu_pd(out + i, acc);
  }
  for (; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < dims; ++k) {
      const double diff = q[k] - cols[k][i];
      acc = acc + diff * diff;
    }
    out[i] = acc;
  }
}

}  // namespace dlo::simd::avx2

#endif
