#pragma once

#include <cstddef>

namespace vf::kernels {

// Hot arithmetic kernels behind a dispatch table. The scalar backend is the
// reference; the AVX2 backend must agree with it within test tolerances
// (see tests/test_kernels.cpp). Backend selection happens once at startup:
// AVX2 when compiled in and the CPU reports support, overridable through
// VASCUFOLD_KERNELS=scalar|avx2.
struct Ops {
    const char* name;

    double (*dot)(const double* a, const double* b, size_t n);
    double (*sum)(const double* x, size_t n);
    double (*sumsq)(const double* x, size_t n);
    void (*axpy)(double a, const double* x, double* y, size_t n);   // y += a*x
    void (*scale)(double a, double* x, size_t n);                   // x *= a
    void (*vadd)(const double* x, double* y, size_t n);             // y += x
    void (*vmul)(const double* x, double* y, size_t n);             // y *= x
    void (*vexp)(const double* x, double* y, size_t n);             // y = exp(x)

    // Row-major C(m,n) = A(m,k)*B(k,n), accumulating into C when accumulate
    // is set. Accumulation over k is sequential per output element, so the
    // result is independent of internal row partitioning.
    void (*matmul)(const double* a, const double* b, double* c,
                   size_t m, size_t k, size_t n, bool accumulate);
};

const Ops& scalar_ops();
bool avx2_compiled();
bool avx2_supported();      // compiled in and CPU reports AVX2+FMA
const Ops& avx2_ops();      // valid only when avx2_supported()
const Ops& active();

// Worker-thread count used by matmul for large problems (1 disables).
// Reads VASCUFOLD_THREADS once; defaults to min(hardware_concurrency, 4).
int thread_count();

inline double dot(const double* a, const double* b, size_t n) { return active().dot(a, b, n); }
inline double sum(const double* x, size_t n) { return active().sum(x, n); }
inline double sumsq(const double* x, size_t n) { return active().sumsq(x, n); }
inline void axpy(double a, const double* x, double* y, size_t n) { active().axpy(a, x, y, n); }
inline void scale(double a, double* x, size_t n) { active().scale(a, x, n); }
inline void vadd(const double* x, double* y, size_t n) { active().vadd(x, y, n); }
inline void vmul(const double* x, double* y, size_t n) { active().vmul(x, y, n); }
inline void vexp(const double* x, double* y, size_t n) { active().vexp(x, y, n); }
// Threaded front end: partitions rows across workers for large problems and
// calls the active backend per slice. Results match the single-threaded call
// exactly because each output row is produced by exactly one worker.
void matmul(const double* a, const double* b, double* c,
            size_t m, size_t k, size_t n, bool accumulate = false);

}  // namespace vf::kernels
