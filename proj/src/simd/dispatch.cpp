#include <cstdlib>
#include <string>

#include "dlo/simd/kernels.hpp"
#include "kernels_internal.hpp"

namespace dlo::simd {

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

const KernelTable& scalar_kernels() {
  static const KernelTable table{Isa::Scalar, scalar::sq_dist3, scalar::nearest3,
                                 scalar::count_plane_inliers, scalar::sq_dist_nd};
  return table;
}

const KernelTable* avx2_kernels() {
#if defined(DLO_HAVE_AVX2) && (defined(__x86_64__) || defined(_M_X64))
  static const KernelTable table{Isa::Avx2, avx2::sq_dist3, avx2::nearest3,
                                 avx2::count_plane_inliers, avx2::sq_dist_nd};
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") != 0;
  }();
  return supported ? &table : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable* neon_kernels() {
#if defined(DLO_HAVE_NEON) && defined(__aarch64__)
  // NEON is architectural on AArch64.
  static const KernelTable table{Isa::Neon, neon::sq_dist3, neon::nearest3,
                                 neon::count_plane_inliers, neon::sq_dist_nd};
  return &table;
#else
  return nullptr;
#endif
}

std::vector<const KernelTable*> available_kernels() {
  std::vector<const KernelTable*> out{&scalar_kernels()};
  if (const auto* t = avx2_kernels()) out.push_back(t);
  if (const auto* t = neon_kernels()) out.push_back(t);
  return out;
}

namespace {

const KernelTable& resolve() {
  const char* forced = std::getenv("DLO_SIMD");
  const std::string want = forced ? forced : "";
  if (want == "scalar") return scalar_kernels();
  if (want == "avx2" && avx2_kernels()) return *avx2_kernels();
  if (want == "neon" && neon_kernels()) return *neon_kernels();
  if (const auto* t = avx2_kernels()) return *t;
  if (const auto* t = neon_kernels()) return *t;
  return scalar_kernels();
}

}  // namespace

const KernelTable& kernels() {
  static const KernelTable& table = resolve();
  return table;
}

}  // namespace dlo::simd
