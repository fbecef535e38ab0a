#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace dolce::scenario {

struct ScoreHistogram {
    std::array<long long, 10> bins{};  // [0,0.1), ..., [0.9,1.0]
    long long n = 0;
};

ScoreHistogram bucketize(const std::vector<double>& scores);

/// One bin-midpoint value per count, sorted ascending.
std::vector<double> midpoint_sample(const ScoreHistogram& hist);

/// Hartigan & Hartigan dip statistic: the distance from the empirical
/// distribution to the nearest unimodal distribution (greatest convex
/// minorant left of the mode, least concave majorant right of it), with the
/// classical 1/(2n) floor. Throws InputError for n < 2.
double dip_statistic(std::vector<double> sample);

struct DipResult {
    double dip = 0.0;
    double p = 1.0;
};

/// Monte Carlo calibration: p = fraction of n_mc uniform(0,1) samples of the
/// same size whose dip is >= the observed dip. Deterministic given seed.
DipResult dip_pvalue(const std::vector<double>& sample, int n_mc, std::uint64_t seed);

enum class Label { COW, PIG };

const char* to_string(Label l);

struct ClassifyResult {
    double dip = 0.0;
    double p = 1.0;
    Label label = Label::COW;
    bool degenerate = false;  // fewer than 2 numeric scores: defaulted to COW
};

/// Bucketizes to bin midpoints, runs the dip test, routes COW iff p < 0.5.
/// `scores` are the numeric scores of one problem (IDK already excluded).
ClassifyResult classify(const std::vector<double>& scores, int n_mc, std::uint64_t seed);

/// Task-level rule: keep the per-problem split only when both labels have
/// more than `min_side` problems; otherwise the majority label applies to
/// the whole task.
std::vector<Label> apply_task_rule(const std::vector<Label>& labels, long long min_side = 10);

}  // namespace dolce::scenario
