#include "dolce/analysis.hpp"

#include "dolce/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

namespace dolce::analysis {

namespace {

std::vector<double> fractional_ranks(const std::vector<double>& xs) {
    const std::size_t n = xs.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return xs[a] < xs[b];
    });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based average rank
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
        i = j + 1;
    }
    return ranks;
}

double median(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

}  // namespace

double rel_change(double ref, double test) {
    if (ref < 0 || test < 0) throw InputError("rel_change: negative input");
    const double mx = std::max(ref, test);
    if (mx == 0.0) return 0.0;
    return std::fabs(ref - test) / mx;
}

std::optional<double> spearman(const std::vector<double>& ref,
                               const std::vector<double>& test) {
    if (ref.size() != test.size()) throw InputError("spearman: length mismatch");
    if (ref.size() < 2) throw InputError("spearman: need at least 2 pairs");

    const auto ra = fractional_ranks(ref);
    const auto rb = fractional_ranks(test);
    const double n = static_cast<double>(ra.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0, va = 0, vb = 0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        cov += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (va == 0.0 || vb == 0.0) return std::nullopt;  // constant list: undefined
    return cov / std::sqrt(va * vb);
}

double kl_noise(const em::NoiseParams& p, const em::NoiseParams& q) {
    const double ps[3] = {p.p1, p.p0, p.p_idk};
    const double qs[3] = {q.p1, q.p0, q.p_idk};
    double kl = 0.0;
    for (int i = 0; i < 3; ++i) {
        if (ps[i] == 0.0) continue;
        if (qs[i] <= 0.0) return std::numeric_limits<double>::infinity();
        kl += ps[i] * std::log(ps[i] / qs[i]);
    }
    return std::max(0.0, kl);
}

RunComparison compare_runs(const std::vector<em::ProblemFit>& ref,
                           const std::vector<em::ProblemFit>& test,
                           const em::NoiseParams& ref_noise,
                           const em::NoiseParams& test_noise) {
    std::unordered_map<std::string, const em::ProblemFit*> by_id;
    for (const auto& f : test) by_id[f.problem_id] = &f;

    std::vector<double> dl, dk, la, lb, ka, kb;
    for (const auto& f : ref) {
        auto it = by_id.find(f.problem_id);
        if (it == by_id.end()) continue;
        const em::ProblemFit& g = *it->second;
        if (f.lambda_star == 0 || g.lambda_star == 0) continue;  // Category I in either run
        dl.push_back(rel_change(static_cast<double>(f.lambda_star),
                                static_cast<double>(g.lambda_star)));
        dk.push_back(rel_change(static_cast<double>(f.k_star), static_cast<double>(g.k_star)));
        la.push_back(static_cast<double>(f.lambda_star));
        lb.push_back(static_cast<double>(g.lambda_star));
        ka.push_back(static_cast<double>(f.k_star));
        kb.push_back(static_cast<double>(g.k_star));
    }
    if (dl.size() < 2) throw InputError("compare_runs: fewer than 2 comparable problems");

    RunComparison out;
    out.n_compared = static_cast<long long>(dl.size());
    out.delta_lambda_median = median(dl);
    out.delta_k_median = median(dk);
    out.spearman_lambda = spearman(la, lb);
    out.spearman_k = spearman(ka, kb);
    out.kl_noise = kl_noise(ref_noise, test_noise);
    return out;
}

}  // namespace dolce::analysis
