#pragma once

#include "dolce/em_cow.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dolce::em {

struct PigRecord {
    std::string problem_id;
    long long c = 0;
    bool idk = false;
    double s = 0.0;  // in [0,1] when !idk
};

// Soft decomposition of a continuous score into the discrete y alphabet.
struct YDecomposition {
    double y1 = 0.0, y_idk = 0.0, y0 = 0.0;
};

YDecomposition y_decompose(bool idk, double s);

struct PigFitResult {
    std::vector<ProblemFit> fits;  // anchored_s/length_oracle populated
    NoiseParams noise;             // P(y|N), y-level
    std::vector<double> loglik_trace;
};

/// EM fit for the partial-point scenario (5 iterations by default). The
/// oracle density for a record of length c is the rho density evaluated at
/// that length's anchored success rate; the noise density is the uniform 1.
PigFitResult fit_pig(const std::vector<PigRecord>& records,
                     const std::map<std::string, CandidateGrid>& grids,
                     const std::map<std::string, long long>& context_lengths,
                     int iterations = 5);

/// Mixture log-density of one problem's records under a fit. Numeric records
/// use the continuous mixture; IDK records go through the y-level channels.
double loglik_pig(const std::vector<PigRecord>& records, const ProblemFit& fit,
                  const NoiseParams& noise, long long L);

}  // namespace dolce::em
