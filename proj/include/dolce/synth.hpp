#pragma once

#include "dolce/corpus.hpp"
#include "dolce/em_cow.hpp"
#include "dolce/em_pig.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dolce::synth {

// Generates observation records from the generative model with known
// parameters; the ground-truth oracle for recovery tests.
struct SynthSpec {
    std::string problem_id = "synthetic";
    long long L = 0;
    long long lambda = 0;
    long long k = 0;
    double prior_oracle = 1.0;
    em::NoiseParams noise;          // outcome distribution of the noise component
    em::NoiseParams oracle_nonpar;  // COW oracle behavior below lambda
    corpus::SpanPlan plan;
    enum class Scenario { COW, PIG } scenario = Scenario::COW;
    /// GridPmf draws the covered fraction from the exact rho_tilde pmf over
    /// {0, 1/lambda, ..., 1}; Density draws from the normalized continuous
    /// density the estimator assumes.
    enum class PigDraw { GridPmf, Density } pig_draw = PigDraw::GridPmf;
    std::uint64_t seed = 0;
};

/// Per span: z ~ prior; noise draws from `noise`; the oracle draws "1" with
/// probability pi(lambda,k;L,C) at C >= lambda and from `oracle_nonpar`
/// below. One counter-based stream per span index.
std::vector<em::CowRecord> gen_cow(const SynthSpec& spec);

/// Per span: z ~ prior; noise draws s ~ U[0,1); the oracle draws the covered
/// fraction from the exact rho_tilde pmf.
std::vector<em::PigRecord> gen_pig(const SynthSpec& spec);

}  // namespace dolce::synth
