#pragma once

#include <string>
#include <vector>

namespace dolce::taxonomy {

struct Thresholds {
    long long lambda_p = 1;
    long long k_p = 1;
    long long lambda_q = 1;
};

enum class FocusCategory { I, II, III, IV, V };

const char* to_string(FocusCategory c);
FocusCategory category_from_string(const std::string& name);

/// lambda_p = k_p = first tertile (floor(N/3), zero-based) of the exponential
/// core; lambda_q = its maximum. The core is the ladder minus the special
/// values {0, max+1, L}, falling back to the largest nonzero entry when that
/// would leave nothing.
Thresholds thresholds_from_lengths(const std::vector<long long>& lengths, long long L);

/// Figure-of-merit partition of the lambda-k plane:
///   I lambda=0; II lambda<=lambda_p, k>k_p; III lambda<=lambda_p, k<=k_p;
///   IV lambda in (lambda_p, lambda_q]; V lambda in (lambda_q, L].
FocusCategory assign(long long lambda, long long k, const Thresholds& thr, long long L);

}  // namespace dolce::taxonomy
