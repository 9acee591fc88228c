#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

// Data-parallel inner loops shared by the point-cloud, clustering and
// registration code. Each kernel has a scalar reference implementation and,
// where the target allows it, AVX2 (x86-64) and NEON (AArch64) variants.
// Every variant evaluates the same sequence of IEEE multiplies and adds per
// lane, so results are bit-identical across variants (the build disables
// floating-point contraction). The dispatcher picks the widest variant the
// CPU supports; DLO_SIMD=scalar|avx2|neon forces a choice.
namespace dlo::simd {

enum class Isa { Scalar, Avx2, Neon };

std::string_view to_string(Isa isa);

struct Nearest {
  std::size_t index = 0;  // first index attaining the minimum
  double sq_dist = 0.0;
};

struct KernelTable {
  Isa isa;

  // out[i] = (q0-x[i])^2 + (q1-y[i])^2 + (q2-z[i])^2
  void (*sq_dist3)(const double* q, const double* x, const double* y, const double* z,
                   std::size_t n, double* out);

  // Argmin of sq_dist3 over [0, n); n must be > 0. Ties keep the lowest index.
  Nearest (*nearest3)(const double* q, const double* x, const double* y, const double* z,
                      std::size_t n);

  // Number of points with |a*x + b*y + c*z + d| <= tol. coef = {a, b, c, d}.
  std::size_t (*count_plane_inliers)(const double* coef, const double* x, const double* y,
                                     const double* z, std::size_t n, double tol);

  // out[i] = sum_k (q[k] - cols[k][i])^2, accumulated in k order.
  void (*sq_dist_nd)(const double* q, const double* const* cols, std::size_t dims,
                     std::size_t n, double* out);
};

const KernelTable& scalar_kernels();

// nullptr when the variant is not compiled in or the CPU lacks the feature.
const KernelTable* avx2_kernels();
const KernelTable* neon_kernels();

/// Tables usable on this machine, scalar first.
std::vector<const KernelTable*> available_kernels();

/// Dispatched table (resolved once).
const KernelTable& kernels();

}  // namespace dlo::simd
