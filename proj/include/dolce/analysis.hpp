#pragma once

#include "dolce/em_cow.hpp"

#include <optional>
#include <vector>

namespace dolce::analysis {

/// |ref - test| / max(ref, test); 0 when both are zero. Symmetric and
/// scale-free.
double rel_change(double ref, double test);

/// Spearman rank correlation with average ranks for ties. Undefined (no
/// value) when either list is constant.
std::optional<double> spearman(const std::vector<double>& ref,
                               const std::vector<double>& test);

/// KL(p || q) over the three outcomes, natural log; +infinity when q lacks
/// mass somewhere p has it.
double kl_noise(const em::NoiseParams& p, const em::NoiseParams& q);

struct RunComparison {
    double delta_lambda_median = 0.0;
    double delta_k_median = 0.0;
    std::optional<double> spearman_lambda;
    std::optional<double> spearman_k;
    double kl_noise = 0.0;
    long long n_compared = 0;
};

/// Joins two fitted runs on problem id, drops problems that either run put
/// in Category I (lambda = 0), and reports the comparison metrics.
RunComparison compare_runs(const std::vector<em::ProblemFit>& ref,
                           const std::vector<em::ProblemFit>& test,
                           const em::NoiseParams& ref_noise,
                           const em::NoiseParams& test_noise);

}  // namespace dolce::analysis
