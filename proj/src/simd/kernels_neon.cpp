#include "kernels_internal.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

#include <cmath>

namespace dlo::simd::neon {

void sq_dist3(const double* q, const double* x, const double* y, const double* z,
              std::size_t n, double* out) {
  const float64x2_t qx = vdupq_n_f64(q[0]);
  const float64x2_t qy = vdupq_n_f64(q[1]);
  const float64x2_t qz = vdupq_n_f64(q[2]);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t dx = vsubq_f64(qx, vld1q_f64(x + i));
    const float64x2_t dy = vsubq_f64(qy, vld1q_f64(y + i));
    const float64x2_t dz = vsubq_f64(qz, vld1q_f64(z + i));
    float64x2_t acc = vaddq_f64(vmulq_f64(dx, dx), vmulq_f64(dy, dy));
    acc = vaddq_f64(acc, vmulq_f64(dz, dz));
    vst1q_f64(out + i, acc);
  }
  if (i < n) scalar::sq_dist3(q, x + i, y + i, z + i, n - i, out + i);
}

Nearest nearest3(const double* q, const double* x, const double* y, const double* z,
                 std::size_t n) {
  double block[2];
  const float64x2_t qx = vdupq_n_f64(q[0]);
  const float64x2_t qy = vdupq_n_f64(q[1]);
  const float64x2_t qz = vdupq_n_f64(q[2]);
  Nearest best{0, INFINITY};
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t dx = vsubq_f64(qx, vld1q_f64(x + i));
    const float64x2_t dy = vsubq_f64(qy, vld1q_f64(y + i));
    const float64x2_t dz = vsubq_f64(qz, vld1q_f64(z + i));
    float64x2_t acc = vaddq_f64(vmulq_f64(dx, dx), vmulq_f64(dy, dy));
    acc = vaddq_f64(acc, vmulq_f64(dz, dz));
    vst1q_f64(block, acc);
    if (block[0] < best.sq_dist) best = {i, block[0]};
    if (block[1] < best.sq_dist) best = {i + 1, block[1]};
  }
  if (i < n) {
    const Nearest tail = scalar::nearest3(q, x + i, y + i, z + i, n - i);
    if (tail.sq_dist < best.sq_dist) best = {i + tail.index, tail.sq_dist};
  }
  return best;
}

std::size_t count_plane_inliers(const double* coef, const double* x, const double* y,
                                const double* z, std::size_t n, double tol) {
  const float64x2_t a = vdupq_n_f64(coef[0]);
  const float64x2_t b = vdupq_n_f64(coef[1]);
  const float64x2_t c = vdupq_n_f64(coef[2]);
  const float64x2_t d = vdupq_n_f64(coef[3]);
  const float64x2_t vtol = vdupq_n_f64(tol);
  std::size_t count = 0;
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t r = vaddq_f64(vmulq_f64(a, vld1q_f64(x + i)), vmulq_f64(b, vld1q_f64(y + i)));
    r = vaddq_f64(r, vmulq_f64(c, vld1q_f64(z + i)));
    r = vaddq_f64(r, d);
    const uint64x2_t le = vcleq_f64(vabsq_f64(r), vtol);
    count += (vgetq_lane_u64(le, 0) & 1u) + (vgetq_lane_u64(le, 1) & 1u);
  }
  if (i < n) count += scalar::count_plane_inliers(coef, x + i, y + i, z + i, n - i, tol);
  return count;
}

void sq_dist_nd(const double* q, const double* const* cols, std::size_t dims, std::size_t n,
                double* out) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t acc = vdupq_n_f64(0.0);
    for (std::size_t k = 0; k < dims; ++k) {
      const float64x2_t diff = vsubq_f64(vdupq_n_f64(q[k]), vld1q_f64(cols[k] + i));
      acc = vaddq_f64(acc, vmulq_f64(diff, diff));
    }
    vst1q_f64(out + i, acc);
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

}  // namespace dlo::simd::neon

#endif
