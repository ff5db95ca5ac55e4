#include "vascufold/core/kernels.hpp"

#include <cmath>

// Reference backend. Plain loops, k-sequential accumulation; the AVX2 backend
// follows the same accumulation order per output element.

namespace vf::kernels {
namespace {

double s_dot(const double* a, const double* b, size_t n) {
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double s_sum(const double* x, size_t n) {
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

double s_sumsq(const double* x, size_t n) {
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) acc += x[i] * x[i];
    return acc;
}

void s_axpy(double a, const double* x, double* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void s_scale(double a, double* x, size_t n) {
    for (size_t i = 0; i < n; ++i) x[i] *= a;
}

void s_vadd(const double* x, double* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] += x[i];
}

void s_vmul(const double* x, double* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] *= x[i];
}

void s_vexp(const double* x, double* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] = std::exp(x[i]);
}

void s_matmul(const double* a, const double* b, double* c,
              size_t m, size_t k, size_t n, bool accumulate) {
    for (size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        if (!accumulate)
            for (size_t j = 0; j < n; ++j) crow[j] = 0.0;
        const double* arow = a + i * k;
        for (size_t p = 0; p < k; ++p) {
            double av = arow[p];
            const double* brow = b + p * n;
            for (size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

}  // namespace

const Ops& scalar_ops() {
    static const Ops ops = {
        "scalar", s_dot, s_sum, s_sumsq, s_axpy, s_scale, s_vadd, s_vmul, s_vexp, s_matmul,
    };
    return ops;
}

}  // namespace vf::kernels
