#pragma once

#include "dlo/simd/kernels.hpp"

// Per-ISA entry points. Each set lives in its own translation unit so that
// only that unit is compiled with the wider instruction set.
namespace dlo::simd {

#define DLO_DECLARE_KERNELS(ns)                                                             \
  namespace ns {                                                                            \
  void sq_dist3(const double* q, const double* x, const double* y, const double* z,         \
                std::size_t n, double* out);                                                \
  Nearest nearest3(const double* q, const double* x, const double* y, const double* z,      \
                   std::size_t n);                                                          \
  std::size_t count_plane_inliers(const double* coef, const double* x, const double* y,     \
                                  const double* z, std::size_t n, double tol);              \
  void sq_dist_nd(const double* q, const double* const* cols, std::size_t dims,             \
                  std::size_t n, double* out);                                              \
  }

DLO_DECLARE_KERNELS(scalar)
DLO_DECLARE_KERNELS(avx2)
DLO_DECLARE_KERNELS(neon)

#undef DLO_DECLARE_KERNELS

}  // namespace dlo::simd
