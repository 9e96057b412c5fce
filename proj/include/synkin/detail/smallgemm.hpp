#pragma once

// Matrix product kernels tuned for the shapes the factorization loop runs
// millions of times: one dimension tiny (the channel count or the synergy
// count, at most a dozen or so) and the other long (time). General-purpose
// dense products pay packing and dispatch overhead at these sizes that
// dominates the arithmetic, so these routines handle the shapes directly.
//
// All matrices are dense, column-major, contiguous (leading dimension equal
// to the row count). The default entry points dispatch at runtime to an
// AVX2+FMA build of the same loops when the CPU supports it; the *_base
// variants always run the portable build and exist so tests can compare the
// two paths against each other and against a reference implementation.

namespace synkin::detail {

// c (t x j) = a (t x k) * b (k x j), or c += a * b when accumulate is true.
void tall_mul(double* c, const double* a, const double* b, long t, long k, long j,
              bool accumulate);
void tall_mul_base(double* c, const double* a, const double* b, long t, long k, long j,
                   bool accumulate);

// c (i x j) = at' * b for at (t x i), b (t x j): the short-output product,
// taking the tall operand pre-transposed so every access is down a column.
// Fast path for i == 8.
void flat_mul_t(double* c, const double* at, const double* b, long i, long t, long j);
void flat_mul_t_base(double* c, const double* at, const double* b, long i, long t, long j);

// x[u] *= numer[u] / max(denom[u], floor_val) for u < n: the multiplicative
// update step, fused so the division runs in one vector pass.
void mu_scale(double* x, const double* numer, const double* denom, long n,
              double floor_val);
void mu_scale_base(double* x, const double* numer, const double* denom, long n,
                   double floor_val);

// c (r x r) = a' * a for a (t x r): every pairwise column dot, symmetric.
void syrk_cols(double* c, const double* a, long t, long r);
void syrk_cols_base(double* c, const double* a, long t, long r);

// Returns sum of squared entries of (et - ct * w') for et (t x m),
// ct (t x r), w (m x r): the squared residual of the factorization,
// computed without materializing the reconstruction.
double residual_sq(const double* et, const double* w, const double* ct, long t, long m,
                   long r);
double residual_sq_base(const double* et, const double* w, const double* ct, long t,
                        long m, long r);

// True when the runtime-dispatched entry points run the AVX2+FMA build.
bool simd_kernels_active();

}  // namespace synkin::detail
