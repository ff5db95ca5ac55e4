#include "vascufold/eval/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vascufold/core/errors.hpp"

namespace vf {
namespace {

// Lentz continued fraction for the incomplete beta (Numerical Recipes form)
double betacf(double a, double b, double x) {
    const int kMaxIter = 300;
    const double eps = 3e-14, fpmin = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::abs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) break;
    }
    return h;
}

std::vector<double> midranks(const std::vector<double>& v) {
    size_t n = v.size();
    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), size_t{0});
    std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) j++;
        double mid = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (size_t k = i; k <= j; ++k) ranks[idx[k]] = mid;
        i = j + 1;
    }
    return ranks;
}

double pearson_raw(const std::vector<double>& x, const std::vector<double>& y, bool* defined) {
    size_t n = x.size();
    double mx = 0, my = 0;
    for (size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0, sxx = 0, syy = 0;
    for (size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) {
        *defined = false;
        return 0.0;
    }
    *defined = true;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double ln_beta = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
    double front = std::exp(ln_beta + a * std::log(x) + b * std::log(1.0 - x));
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double student_t_two_tailed_p(double t, double df) {
    double x = df / (df + t * t);
    return incomplete_beta(df / 2.0, 0.5, x);
}

CorrelationResult correlation(const std::vector<double>& x, const std::vector<double>& y,
                              CorrMethod method) {
    if (x.size() != y.size()) throw ShapeError("correlation: length mismatch");
    if (x.size() < 3) throw ConfigError("correlation: need n >= 3");
    CorrelationResult res;
    res.n = static_cast<int>(x.size());
    if (method == CorrMethod::Pearson) {
        res.r = pearson_raw(x, y, &res.defined);
    } else {
        auto rx = midranks(x), ry = midranks(y);
        res.r = pearson_raw(rx, ry, &res.defined);
    }
    if (!res.defined) {
        res.p_value = 1.0;
        return res;
    }
    double df = res.n - 2.0;
    if (std::abs(res.r) >= 1.0) {
        res.p_value = 0.0;
    } else {
        double t = res.r * std::sqrt(df / (1.0 - res.r * res.r));
        res.p_value = student_t_two_tailed_p(t, df);
    }
    return res;
}

double correlation_permutation_p(const std::vector<double>& x, const std::vector<double>& y,
                                 CorrMethod method) {
    if (x.size() > 10) throw ConfigError("permutation p: n must be <= 10");
    bool defined;
    std::vector<double> xs = x, ys = y;
    if (method == CorrMethod::Spearman) {
        xs = midranks(x);
        ys = midranks(y);
    }
    double observed = std::abs(pearson_raw(xs, ys, &defined));
    if (!defined) return 1.0;

    std::vector<double> perm = ys;
    std::sort(perm.begin(), perm.end());
    int64_t count = 0, total = 0;
    do {
        bool d2;
        double r = std::abs(pearson_raw(xs, perm, &d2));
        if (d2 && r >= observed - 1e-12) count++;
        total++;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return static_cast<double>(count) / static_cast<double>(total);
}

DelongResult delong_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) throw ShapeError("delong_auc: length mismatch");
    std::vector<double> pos, neg;
    for (size_t i = 0; i < scores.size(); ++i)
        (labels[i] ? pos : neg).push_back(scores[i]);
    if (pos.empty() || neg.empty())
        throw ConfigError("delong_auc: both classes must be present");

    size_t m = pos.size(), n = neg.size();
    std::vector<double> v10(m, 0.0), v01(n, 0.0);
    for (size_t i = 0; i < m; ++i)
        for (size_t j = 0; j < n; ++j) {
            double psi = pos[i] > neg[j] ? 1.0 : (pos[i] == neg[j] ? 0.5 : 0.0);
            v10[i] += psi;
            v01[j] += psi;
        }
    for (auto& v : v10) v /= static_cast<double>(n);
    for (auto& v : v01) v /= static_cast<double>(m);

    DelongResult r;
    r.auc = std::accumulate(v10.begin(), v10.end(), 0.0) / static_cast<double>(m);

    auto sample_var = [](const std::vector<double>& v, double mean) {
        if (v.size() < 2) return 0.0;
        double s = 0;
        for (double x : v) s += (x - mean) * (x - mean);
        return s / static_cast<double>(v.size() - 1);
    };
    r.variance = sample_var(v10, r.auc) / static_cast<double>(m) +
                 sample_var(v01, r.auc) / static_cast<double>(n);
    double half = 1.959963984540054 * std::sqrt(std::max(0.0, r.variance));
    r.ci_lo = std::max(0.0, r.auc - half);
    r.ci_hi = std::min(1.0, r.auc + half);
    return r;
}

}  // namespace vf
