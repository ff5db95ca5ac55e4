#include "vascufold/core/kernels.hpp"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <thread>
#include <vector>

namespace vf::kernels {
namespace {

bool cpu_reports_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const Ops* select_backend() {
    if (const char* env = std::getenv("VASCUFOLD_KERNELS")) {
        if (std::strcmp(env, "scalar") == 0) return &scalar_ops();
        if (std::strcmp(env, "avx2") == 0 && avx2_supported()) return &avx2_ops();
    }
    return avx2_supported() ? &avx2_ops() : &scalar_ops();
}

int select_thread_count() {
    if (const char* env = std::getenv("VASCUFOLD_THREADS")) {
        int v = std::atoi(env);
        if (v >= 1) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return static_cast<int>(std::clamp<unsigned>(hw, 1u, 4u));
}

}  // namespace

bool avx2_supported() {
    static const bool ok = avx2_compiled() && cpu_reports_avx2();
    return ok;
}

const Ops& active() {
    static const Ops* ops = select_backend();
    return *ops;
}

int thread_count() {
    static const int n = select_thread_count();
    return n;
}

void matmul(const double* a, const double* b, double* c,
            size_t m, size_t k, size_t n, bool accumulate) {
    const Ops& ops = active();
    int nthreads = thread_count();
    // Below ~1 MFLOP the spawn overhead dominates.
    if (nthreads <= 1 || m * k * n < (size_t{1} << 19) || m < 2 * static_cast<size_t>(nthreads)) {
        ops.matmul(a, b, c, m, k, n, accumulate);
        return;
    }
    size_t rows_per = (m + nthreads - 1) / nthreads;
    std::vector<std::thread> workers;
    for (int t = 1; t < nthreads; ++t) {
        size_t r0 = t * rows_per;
        if (r0 >= m) break;
        size_t rows = std::min(rows_per, m - r0);
        workers.emplace_back([=, &ops] {
            ops.matmul(a + r0 * k, b, c + r0 * n, rows, k, n, accumulate);
        });
    }
    ops.matmul(a, b, c, std::min(rows_per, m), k, n, accumulate);
    for (auto& w : workers) w.join();
}

}  // namespace vf::kernels
