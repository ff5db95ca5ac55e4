#pragma once

#include <vector>

namespace vf {

enum class CorrMethod { Pearson, Spearman };

struct CorrelationResult {
    double r = 0.0;      // Pearson r or Spearman rho
    double p_value = 1.0;  // two-tailed, t approximation with n-2 df
    bool defined = true;   // false on zero variance
    int n = 0;
};

CorrelationResult correlation(const std::vector<double>& x, const std::vector<double>& y,
                              CorrMethod method);

// Exact permutation p for tiny samples (n <= 10); the oracle for the
// t-approximation in the tests.
double correlation_permutation_p(const std::vector<double>& x, const std::vector<double>& y,
                                 CorrMethod method);

struct DelongResult {
    double auc = 0.0;
    double variance = 0.0;
    double ci_lo = 0.0, ci_hi = 0.0;  // 95%, clipped to [0,1]
};

// Mann-Whitney AUC with half tie credit; variance from the DeLong
// structural components V10/V01.
DelongResult delong_auc(const std::vector<double>& scores, const std::vector<int>& labels);

// regularized incomplete beta; exposed because several stats need it
double incomplete_beta(double a, double b, double x);
double student_t_two_tailed_p(double t, double df);

}  // namespace vf
