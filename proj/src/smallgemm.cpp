#include "synkin/detail/smallgemm.hpp"

#include <vector>

// Two builds of the same loops. The portable build uses whatever the project
// is compiled with; the simd build pins AVX2+FMA per function. Which one the
// public entry points run is decided once at startup from the CPU, never from
// compile flags, so a binary built for the baseline ISA still uses 256-bit
// kernels on hardware that has them. Only these self-contained loops are
// compiled for the wider ISA — the rest of the project stays on the default
// flags.

namespace synkin::detail {

namespace portable {
#define SYNKIN_KT static
#include "smallgemm_kernels.inc"
#undef SYNKIN_KT
}  // namespace portable

namespace simd {
#define SYNKIN_KT static __attribute__((target("avx2,fma")))
#include "smallgemm_kernels.inc"
#undef SYNKIN_KT
}  // namespace simd

namespace {

bool detect_simd() {
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

const bool g_simd = detect_simd();

// Per-thread scratch for the fused residual evaluation.
struct ResidualScratch {
  std::vector<double> rec;
  std::vector<double> w;
};

ResidualScratch& scratch(long t, long r) {
  thread_local ResidualScratch s;
  if (static_cast<long>(s.rec.size()) < t) s.rec.resize(static_cast<size_t>(t));
  if (static_cast<long>(s.w.size()) < r) s.w.resize(static_cast<size_t>(r));
  return s;
}

}  // namespace

bool simd_kernels_active() { return g_simd; }

void tall_mul(double* c, const double* a, const double* b, long t, long k, long j,
              bool accumulate) {
  if (g_simd) {
    simd::tall_mul_impl(c, a, b, t, k, j, accumulate);
  } else {
    portable::tall_mul_impl(c, a, b, t, k, j, accumulate);
  }
}

void tall_mul_base(double* c, const double* a, const double* b, long t, long k, long j,
                   bool accumulate) {
  portable::tall_mul_impl(c, a, b, t, k, j, accumulate);
}

void flat_mul_t(double* c, const double* at, const double* b, long i, long t, long j) {
  if (g_simd) {
    simd::flat_mul_t_impl(c, at, b, i, t, j);
  } else {
    portable::flat_mul_t_impl(c, at, b, i, t, j);
  }
}

void flat_mul_t_base(double* c, const double* at, const double* b, long i, long t, long j) {
  portable::flat_mul_t_impl(c, at, b, i, t, j);
}

void mu_scale(double* x, const double* numer, const double* denom, long n,
              double floor_val) {
  if (g_simd) {
    simd::mu_scale_impl(x, numer, denom, n, floor_val);
  } else {
    portable::mu_scale_impl(x, numer, denom, n, floor_val);
  }
}

void mu_scale_base(double* x, const double* numer, const double* denom, long n,
                   double floor_val) {
  portable::mu_scale_impl(x, numer, denom, n, floor_val);
}

void syrk_cols(double* c, const double* a, long t, long r) {
  if (g_simd) {
    simd::syrk_cols_impl(c, a, t, r);
  } else {
    portable::syrk_cols_impl(c, a, t, r);
  }
}

void syrk_cols_base(double* c, const double* a, long t, long r) {
  portable::syrk_cols_impl(c, a, t, r);
}

double residual_sq(const double* et, const double* w, const double* ct, long t, long m,
                   long r) {
  ResidualScratch& s = scratch(t, r);
  if (g_simd) {
    return simd::residual_sq_impl(et, w, ct, t, m, r, s.rec.data(), s.w.data());
  }
  return portable::residual_sq_impl(et, w, ct, t, m, r, s.rec.data(), s.w.data());
}

double residual_sq_base(const double* et, const double* w, const double* ct, long t,
                        long m, long r) {
  ResidualScratch& s = scratch(t, r);
  return portable::residual_sq_impl(et, w, ct, t, m, r, s.rec.data(), s.w.data());
}

}  // namespace synkin::detail
