#include "vascufold/core/kernels.hpp"

#ifdef VASCUFOLD_AVX2

#include <immintrin.h>

#include <cmath>

namespace vf::kernels {
namespace {

inline double reduce_add_f64x4(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d swapped = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

double a_dot(const double* a, const double* b, size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    double acc = reduce_add_f64x4(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double a_sum(const double* x, size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
        acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(x + i + 4));
    }
    double acc = reduce_add_f64x4(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += x[i];
    return acc;
}

double a_sumsq(const double* x, size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256d v0 = _mm256_loadu_pd(x + i);
        __m256d v1 = _mm256_loadu_pd(x + i + 4);
        acc0 = _mm256_fmadd_pd(v0, v0, acc0);
        acc1 = _mm256_fmadd_pd(v1, v1, acc1);
    }
    double acc = reduce_add_f64x4(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += x[i] * x[i];
    return acc;
}

void a_axpy(double a, const double* x, double* y, size_t n) {
    __m256d av = _mm256_set1_pd(a);
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d yv = _mm256_loadu_pd(y + i);
        yv = _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), yv);
        _mm256_storeu_pd(y + i, yv);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void a_scale(double a, double* x, size_t n) {
    __m256d av = _mm256_set1_pd(a);
    size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(x + i, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) x[i] *= a;
}

void a_vadd(const double* x, double* y, size_t n) {
    size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) y[i] += x[i];
}

void a_vmul(const double* x, double* y, size_t n) {
    size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_mul_pd(_mm256_loadu_pd(y + i), _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) y[i] *= x[i];
}

// exp via Cody-Waite range reduction and a cephes-style rational on the
// reduced argument: exp(r) = 1 + 2r P(r^2)/(Q(r^2) - r P(r^2)). Accurate to
// a couple of ulp over the non-overflowing range, which the equivalence
// tests pin against std::exp.
inline __m256d exp4(__m256d x) {
    const __m256d log2e = _mm256_set1_pd(1.4426950408889634074);
    const __m256d ln2_hi = _mm256_set1_pd(6.93145751953125e-1);
    const __m256d ln2_lo = _mm256_set1_pd(1.42860682030941723212e-6);
    const __m256d p0 = _mm256_set1_pd(1.26177193074810590878e-4);
    const __m256d p1 = _mm256_set1_pd(3.02994407707441961300e-2);
    const __m256d p2 = _mm256_set1_pd(9.99999999999999999910e-1);
    const __m256d q0 = _mm256_set1_pd(3.00198505138664455042e-6);
    const __m256d q1 = _mm256_set1_pd(2.52448340349684104192e-3);
    const __m256d q2 = _mm256_set1_pd(2.27265548208155028766e-1);
    const __m256d q3 = _mm256_set1_pd(2.00000000000000000005e0);
    // clamp keeps 2^fn inside the normal exponent range
    const __m256d max_x = _mm256_set1_pd(708.0);
    const __m256d min_x = _mm256_set1_pd(-708.0);

    __m256d xc = _mm256_min_pd(_mm256_max_pd(x, min_x), max_x);
    __m256d fn = _mm256_round_pd(_mm256_mul_pd(xc, log2e),
                                 _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(fn, ln2_hi, xc);
    r = _mm256_fnmadd_pd(fn, ln2_lo, r);

    __m256d r2 = _mm256_mul_pd(r, r);
    __m256d p = _mm256_fmadd_pd(_mm256_fmadd_pd(p0, r2, p1), r2, p2);
    p = _mm256_mul_pd(p, r);
    __m256d q = _mm256_fmadd_pd(_mm256_fmadd_pd(_mm256_fmadd_pd(q0, r2, q1), r2, q2), r2, q3);
    __m256d expr = _mm256_div_pd(p, _mm256_sub_pd(q, p));
    expr = _mm256_fmadd_pd(_mm256_set1_pd(2.0), expr, _mm256_set1_pd(1.0));

    // scale by 2^fn through the exponent field
    __m128i ni = _mm256_cvtpd_epi32(fn);
    __m256i n64 = _mm256_cvtepi32_epi64(ni);
    __m256i pow2 = _mm256_slli_epi64(_mm256_add_epi64(n64, _mm256_set1_epi64x(1023)), 52);
    return _mm256_mul_pd(expr, _mm256_castsi256_pd(pow2));
}

void a_vexp(const double* x, double* y, size_t n) {
    size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, exp4(_mm256_loadu_pd(x + i)));
    if (i < n) {
        double tail_in[4] = {0, 0, 0, 0};
        double tail_out[4];
        for (size_t j = i; j < n; ++j) tail_in[j - i] = x[j];
        _mm256_storeu_pd(tail_out, exp4(_mm256_loadu_pd(tail_in)));
        for (size_t j = i; j < n; ++j) y[j] = tail_out[j - i];
    }
}

// 4-row x 8-col FMA microkernel, k-sequential accumulation.
inline void mm_block_4x8(const double* a, const double* b, double* c,
                         size_t k, size_t lda, size_t ldb, size_t ldc) {
    __m256d c00 = _mm256_loadu_pd(c + 0 * ldc);
    __m256d c01 = _mm256_loadu_pd(c + 0 * ldc + 4);
    __m256d c10 = _mm256_loadu_pd(c + 1 * ldc);
    __m256d c11 = _mm256_loadu_pd(c + 1 * ldc + 4);
    __m256d c20 = _mm256_loadu_pd(c + 2 * ldc);
    __m256d c21 = _mm256_loadu_pd(c + 2 * ldc + 4);
    __m256d c30 = _mm256_loadu_pd(c + 3 * ldc);
    __m256d c31 = _mm256_loadu_pd(c + 3 * ldc + 4);
    for (size_t p = 0; p < k; ++p) {
        __m256d b0 = _mm256_loadu_pd(b + p * ldb);
        __m256d b1 = _mm256_loadu_pd(b + p * ldb + 4);
        __m256d a0 = _mm256_broadcast_sd(a + 0 * lda + p);
        __m256d a1 = _mm256_broadcast_sd(a + 1 * lda + p);
        c00 = _mm256_fmadd_pd(a0, b0, c00);
        c01 = _mm256_fmadd_pd(a0, b1, c01);
        c10 = _mm256_fmadd_pd(a1, b0, c10);
        c11 = _mm256_fmadd_pd(a1, b1, c11);
        __m256d a2 = _mm256_broadcast_sd(a + 2 * lda + p);
        __m256d a3 = _mm256_broadcast_sd(a + 3 * lda + p);
        c20 = _mm256_fmadd_pd(a2, b0, c20);
        c21 = _mm256_fmadd_pd(a2, b1, c21);
        c30 = _mm256_fmadd_pd(a3, b0, c30);
        c31 = _mm256_fmadd_pd(a3, b1, c31);
    }
    _mm256_storeu_pd(c + 0 * ldc, c00);
    _mm256_storeu_pd(c + 0 * ldc + 4, c01);
    _mm256_storeu_pd(c + 1 * ldc, c10);
    _mm256_storeu_pd(c + 1 * ldc + 4, c11);
    _mm256_storeu_pd(c + 2 * ldc, c20);
    _mm256_storeu_pd(c + 2 * ldc + 4, c21);
    _mm256_storeu_pd(c + 3 * ldc, c30);
    _mm256_storeu_pd(c + 3 * ldc + 4, c31);
}

void a_matmul(const double* a, const double* b, double* c,
              size_t m, size_t k, size_t n, bool accumulate) {
    if (!accumulate)
        for (size_t i = 0; i < m * n; ++i) c[i] = 0.0;

    size_t m4 = m - m % 4;
    size_t n8 = n - n % 8;
    for (size_t i = 0; i < m4; i += 4)
        for (size_t j = 0; j < n8; j += 8)
            mm_block_4x8(a + i * k, b + j, c + i * n + j, k, k, n, n);

    // right edge (n % 8) for the blocked rows
    if (n8 < n) {
        for (size_t i = 0; i < m4; ++i) {
            double* crow = c + i * n;
            const double* arow = a + i * k;
            for (size_t p = 0; p < k; ++p) {
                double av = arow[p];
                const double* brow = b + p * n;
                for (size_t j = n8; j < n; ++j) crow[j] += av * brow[j];
            }
        }
    }
    // bottom edge (m % 4)
    for (size_t i = m4; i < m; ++i) {
        double* crow = c + i * n;
        const double* arow = a + i * k;
        for (size_t p = 0; p < k; ++p) {
            double av = arow[p];
            const double* brow = b + p * n;
            for (size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

}  // namespace

const Ops& avx2_ops() {
    static const Ops ops = {
        "avx2", a_dot, a_sum, a_sumsq, a_axpy, a_scale, a_vadd, a_vmul, a_vexp, a_matmul,
    };
    return ops;
}

bool avx2_compiled() { return true; }

}  // namespace vf::kernels

#else

namespace vf::kernels {
const Ops& avx2_ops() { return scalar_ops(); }
bool avx2_compiled() { return false; }
}  // namespace vf::kernels

#endif
