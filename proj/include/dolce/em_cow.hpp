#pragma once

#include "dolce/scoring.hpp"

#include <map>
#include <string>
#include <vector>

namespace dolce::em {

struct NoiseParams {
    double p1 = 0.0, p0 = 0.0, p_idk = 0.0;

    double at(scoring::CowOutcome x) const {
        switch (x) {
            case scoring::CowOutcome::One: return p1;
            case scoring::CowOutcome::Zero: return p0;
            case scoring::CowOutcome::Idk: return p_idk;
        }
        return 0.0;
    }
};

struct CandidateGrid {
    std::vector<long long> lambdas;   // sorted ascending; always contains 0
    std::vector<long long> ks;        // same candidate set
    std::vector<long long> exp_core;  // threshold basis (exponential ladder)
};

/// Candidates = ladder ∪ {0, max(ladder)+1, L}. Pairs with k*lambda > L stay
/// in the sets and are skipped at search time.
CandidateGrid build_grid(const std::vector<long long>& lengths, long long L);

struct CowRecord {
    std::string problem_id;
    long long c = 0;
    scoring::CowOutcome outcome = scoring::CowOutcome::Idk;
};

struct PosteriorRow {
    long long c = 0;
    scoring::CowOutcome outcome = scoring::CowOutcome::Idk;
    long long count = 0;
    double q_oracle = 0.5;
    double q_noise = 0.5;
};

struct ProblemFit {
    std::string problem_id;
    long long lambda_star = 0;
    long long k_star = 0;
    double prior_oracle = 0.5;
    NoiseParams oracle_nonpar;             // fitted P_nonpar(.|O) at lambda_star
    std::vector<PosteriorRow> posteriors;  // final posteriors per (C, outcome)
    std::vector<double> loglik_trace;      // this problem's loglik per iteration
    double loglik = 0.0;
    std::map<long long, double> anchored_s;  // PIG: P(y=1|O) per observation length
    std::map<long long, NoiseParams> length_oracle;  // PIG: full P(y|O) per length
    bool flagged = false;  // some record had zero probability under both components
};

struct CowFitResult {
    std::vector<ProblemFit> fits;
    NoiseParams noise;
    std::vector<double> loglik_trace;  // joint (task-level) loglik per iteration
};

/// EM fit over one task. Records may interleave problems; grids/context
/// lengths are keyed by problem id. 10 iterations by default.
CowFitResult fit_cow(const std::vector<CowRecord>& records,
                     const std::map<std::string, CandidateGrid>& grids,
                     const std::map<std::string, long long>& context_lengths,
                     int iterations = 10);

/// Observed-data log-likelihood of one problem's records under a fit;
/// -infinity when a record is impossible under both components.
double loglik_cow(const std::vector<CowRecord>& records, const ProblemFit& fit,
                  const NoiseParams& noise, long long L);

}  // namespace dolce::em
