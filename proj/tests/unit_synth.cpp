#include "dolce/synth.hpp"

#include "dolce/corpus.hpp"
#include "dolce/cover.hpp"
#include "dolce/errors.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace dolce;
using namespace dolce::synth;
using scoring::CowOutcome;

namespace {

SynthSpec base_cow(long long L, long long lambda, long long k) {
    SynthSpec spec;
    spec.L = L;
    spec.lambda = lambda;
    spec.k = k;
    spec.prior_oracle = 0.8;
    spec.noise = {0.05, 0.05, 0.90};
    spec.oracle_nonpar = {0.0, 0.0, 1.0};
    spec.scenario = SynthSpec::Scenario::COW;
    spec.seed = 7;
    return spec;
}

}  // namespace

TEST_SUITE_BEGIN("synth");

TEST_CASE("certain success when the oracle always covers") {
    SynthSpec spec = base_cow(20, 1, 20);
    spec.prior_oracle = 1.0;
    spec.plan = corpus::build_plan(20, {1, 2, 5}, corpus::PlanStrategy{}, 0);
    for (const auto& r : gen_cow(spec)) CHECK(r.outcome == CowOutcome::One);
}

TEST_CASE("pure noise passthrough") {
    SynthSpec spec = base_cow(20, 2, 3);
    spec.prior_oracle = 0.0;
    spec.noise = {0.0, 0.0, 1.0};
    spec.plan = corpus::build_plan(20, {1, 5, 10}, corpus::PlanStrategy{}, 0);
    for (const auto& r : gen_cow(spec)) CHECK(r.outcome == CowOutcome::Idk);
}

TEST_CASE("empirical frequencies track the analytic mixture") {
    const long long L = 200, lambda = 5, k = 2, C = 20;
    SynthSpec spec = base_cow(L, lambda, k);
    // many spans of one length: repeat the exhaustive C=20 slice 8 times
    for (int rep = 0; rep < 8; ++rep) {
        auto plan = corpus::build_plan(L, {C}, corpus::PlanStrategy{}, 0);
        spec.plan.spans.insert(spec.plan.spans.end(), plan.spans.begin(), plan.spans.end());
    }
    spec.seed = 99;
    auto recs = gen_cow(spec);
    const double n = static_cast<double>(recs.size());
    REQUIRE(n >= 1000);
    double ones = 0;
    for (const auto& r : recs) ones += r.outcome == CowOutcome::One;
    const double p = 0.8 * cover::pi(lambda, k, L, C) + 0.2 * 0.05;
    const double sigma = std::sqrt(p * (1 - p) / n);
    CHECK(std::fabs(ones / n - p) <= 3 * sigma);
}

TEST_CASE("reproducibility and stream independence") {
    SynthSpec spec = base_cow(50, 2, 2);
    spec.plan = corpus::build_plan(50, {1, 5, 10}, corpus::PlanStrategy{}, 0);
    auto a = gen_cow(spec);
    auto b = gen_cow(spec);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].outcome == b[i].outcome);
    spec.seed = 8;
    auto c = gen_cow(spec);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.size(); ++i) any_diff |= a[i].outcome != c[i].outcome;
    CHECK(any_diff);
}

TEST_CASE("pig grid draws match the exact pmf") {
    const long long L = 6, lambda = 2, k = 1, C = 3;
    SynthSpec spec;
    spec.L = L;
    spec.lambda = lambda;
    spec.k = k;
    spec.prior_oracle = 1.0;
    spec.noise = {0, 0, 1};
    spec.scenario = SynthSpec::Scenario::PIG;
    spec.seed = 3;
    for (int rep = 0; rep < 300; ++rep) {
        auto plan = corpus::build_plan(L, {C}, corpus::PlanStrategy{}, 0);
        spec.plan.spans.insert(spec.plan.spans.end(), plan.spans.begin(), plan.spans.end());
    }
    auto recs = gen_pig(spec);
    const double n = static_cast<double>(recs.size());
    double at0 = 0, at_half = 0, at1 = 0;
    for (const auto& r : recs) {
        if (r.s == 0.0) ++at0;
        if (r.s == 0.5) ++at_half;
        if (r.s == 1.0) ++at1;
    }
    CHECK(at0 + at_half + at1 == n);  // grid-pmf draws live on {0, 1/2, 1}
    auto band = [&](double freq, double p) {
        return std::fabs(freq - p) <= 3 * std::sqrt(p * (1 - p) / n);
    };
    CHECK(band(at0 / n, 0.2));
    CHECK(band(at_half / n, 0.6));
    CHECK(band(at1 / n, 0.2));
}

TEST_CASE("pig noise draws are near-uniform") {
    SynthSpec spec;
    spec.L = 50;
    spec.lambda = 2;
    spec.k = 1;
    spec.prior_oracle = 0.0;
    spec.noise = {0, 0, 1};
    spec.scenario = SynthSpec::Scenario::PIG;
    spec.seed = 11;
    for (int rep = 0; rep < 25; ++rep) {
        auto plan = corpus::build_plan(50, {5}, corpus::PlanStrategy{}, 0);
        spec.plan.spans.insert(spec.plan.spans.end(), plan.spans.begin(), plan.spans.end());
    }
    auto recs = gen_pig(spec);
    REQUIRE(recs.size() >= 1000);
    std::vector<double> s;
    for (const auto& r : recs) s.push_back(r.s);
    std::sort(s.begin(), s.end());
    double ks = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double ecdf_hi = static_cast<double>(i + 1) / static_cast<double>(s.size());
        const double ecdf_lo = static_cast<double>(i) / static_cast<double>(s.size());
        ks = std::max({ks, std::fabs(ecdf_hi - s[i]), std::fabs(s[i] - ecdf_lo)});
    }
    CHECK(ks < 0.1);
}

TEST_CASE("full-context pig observation always covers everything") {
    SynthSpec spec;
    spec.L = 12;
    spec.lambda = 3;
    spec.k = 2;
    spec.prior_oracle = 1.0;
    spec.noise = {0, 0, 1};
    spec.scenario = SynthSpec::Scenario::PIG;
    spec.plan = corpus::build_plan(12, {12}, corpus::PlanStrategy{}, 0);
    for (const auto& r : gen_pig(spec)) CHECK(r.s == 1.0);
}

TEST_CASE("density draws stay in range and spread off-grid") {
    SynthSpec spec;
    spec.L = 60;
    spec.lambda = 6;
    spec.k = 1;
    spec.prior_oracle = 1.0;
    spec.noise = {0, 0, 1};
    spec.scenario = SynthSpec::Scenario::PIG;
    spec.pig_draw = SynthSpec::PigDraw::Density;
    spec.seed = 21;
    for (int rep = 0; rep < 10; ++rep) {
        auto plan = corpus::build_plan(60, {10}, corpus::PlanStrategy{}, 0);
        spec.plan.spans.insert(spec.plan.spans.end(), plan.spans.begin(), plan.spans.end());
    }
    auto recs = gen_pig(spec);
    int off_grid = 0;
    for (const auto& r : recs) {
        CHECK(r.s >= 0.0);
        CHECK(r.s <= 1.0);
        const double g = r.s * 6.0;
        if (std::fabs(g - std::llround(g)) > 1e-9) ++off_grid;
    }
    CHECK(off_grid > static_cast<int>(recs.size()) / 2);
}

TEST_CASE("invalid specs are rejected") {
    SynthSpec spec = base_cow(10, 4, 3);  // k*lambda > L
    spec.plan = corpus::build_plan(10, {2}, corpus::PlanStrategy{}, 0);
    CHECK_THROWS_AS(gen_cow(spec), InputError);

    SynthSpec wrong = base_cow(10, 2, 2);
    wrong.plan = corpus::build_plan(10, {2}, corpus::PlanStrategy{}, 0);
    wrong.scenario = SynthSpec::Scenario::PIG;
    CHECK_THROWS_AS(gen_cow(wrong), InputError);
    wrong.noise = {0.5, 0.2, 0.2};  // not a simplex
    wrong.scenario = SynthSpec::Scenario::COW;
    CHECK_THROWS_AS(gen_cow(wrong), InputError);
}

TEST_SUITE_END();
