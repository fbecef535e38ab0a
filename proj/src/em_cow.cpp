#include "dolce/em_cow.hpp"

#include "dolce/cover.hpp"
#include "dolce/errors.hpp"
#include "dolce/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <unordered_map>

namespace dolce::em {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

using scoring::CowOutcome;

int outcome_index(CowOutcome x) {
    switch (x) {
        case CowOutcome::One: return 0;
        case CowOutcome::Zero: return 1;
        case CowOutcome::Idk: return 2;
    }
    return 2;
}

struct Cell {
    long long c = 0;
    CowOutcome outcome = CowOutcome::Idk;
    long long count = 0;
    double q_oracle = 0.5;
    double q_noise = 0.5;
};

struct Problem {
    std::string id;
    long long L = 0;
    const CandidateGrid* grid = nullptr;
    std::vector<Cell> cells;
    long long n_records = 0;
    double prior_oracle = 0.5;
    long long lambda_star = 0, k_star = 0;
    NoiseParams nonpar_star;                      // nonpar component at the argmax
    std::vector<double> hybrid;                   // P(x|O; lambda*, k*) per cell
    std::unordered_map<long long, double> pi_cache;  // (lambda,k,c) -> pi
    std::vector<double> trace;
    bool flagged = false;
};

double cached_pi(Problem& p, long long lambda, long long k, long long c) {
    const long long key = ((lambda << 21) | k) << 21 | c;  // fine for L < 2^21 units
    auto it = p.pi_cache.find(key);
    if (it != p.pi_cache.end()) return it->second;
    double v = cover::pi(lambda, k, p.L, c);
    p.pi_cache.emplace(key, v);
    return v;
}

/// P_nonpar(.|O; lambda) from posterior-weighted outcome frequencies over the
/// records with C < lambda (C == 0 records for the lambda = 0 candidate).
NoiseParams nonpar_for_lambda(const Problem& p, long long lambda) {
    double w[3] = {0, 0, 0};
    for (const Cell& cell : p.cells) {
        const bool in_support = lambda == 0 ? cell.c == 0 : cell.c < lambda;
        if (!in_support) continue;
        w[outcome_index(cell.outcome)] += static_cast<double>(cell.count) * cell.q_oracle;
    }
    const double tot = w[0] + w[1] + w[2];
    if (tot <= 0.0) return {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    return {w[0] / tot, w[1] / tot, w[2] / tot};
}

/// Hybrid oracle pmf entry for one cell.
double hybrid_prob(Problem& p, long long lambda, long long k, const NoiseParams& nonpar,
                   long long c, CowOutcome x) {
    if (lambda == 0 || c < lambda) return nonpar.at(x);
    const double cover_p = cached_pi(p, lambda, k, c);
    switch (x) {
        case CowOutcome::One: return cover_p;
        case CowOutcome::Zero: return 0.0;  // the oracle never answers incorrectly
        case CowOutcome::Idk: return 1.0 - cover_p;
    }
    return 0.0;
}

bool pair_valid(long long lambda, long long k, long long L) {
    if (lambda == 0 && k == 0) return true;
    return lambda >= 1 && k >= 1 && lambda * k <= L;
}

}  // namespace

CandidateGrid build_grid(const std::vector<long long>& lengths, long long L) {
    if (lengths.empty()) throw InputError("build_grid: empty length ladder");
    std::set<long long> ladder(lengths.begin(), lengths.end());
    const long long max_c = *ladder.rbegin();

    std::set<long long> cand = ladder;
    cand.insert(0);
    cand.insert(max_c + 1);
    cand.insert(L);

    CandidateGrid grid;
    grid.lambdas.assign(cand.begin(), cand.end());
    grid.ks = grid.lambdas;
    for (long long c : ladder)
        if (c != 0 && c != max_c + 1 && c != L) grid.exp_core.push_back(c);
    if (grid.exp_core.empty() && max_c > 0) grid.exp_core.push_back(max_c);
    return grid;
}

CowFitResult fit_cow(const std::vector<CowRecord>& records,
                     const std::map<std::string, CandidateGrid>& grids,
                     const std::map<std::string, long long>& context_lengths,
                     int iterations) {
    if (records.empty()) throw InputError("fit_cow: empty task");
    if (iterations < 1) throw InputError("fit_cow: iterations must be >= 1");

    // Group into problems, preserving first-appearance order.
    std::vector<Problem> problems;
    std::unordered_map<std::string, std::size_t> index;
    for (const CowRecord& r : records) {
        auto [it, fresh] = index.try_emplace(r.problem_id, problems.size());
        if (fresh) {
            Problem p;
            p.id = r.problem_id;
            auto git = grids.find(r.problem_id);
            auto lit = context_lengths.find(r.problem_id);
            if (git == grids.end() || lit == context_lengths.end())
                throw InputError("fit_cow: missing grid or context length for problem " +
                                 r.problem_id);
            p.grid = &git->second;
            p.L = lit->second;
            problems.push_back(std::move(p));
        }
        Problem& p = problems[it->second];
        auto cit = std::find_if(p.cells.begin(), p.cells.end(), [&](const Cell& cell) {
            return cell.c == r.c && cell.outcome == r.outcome;
        });
        if (cit == p.cells.end()) {
            Cell cell;
            cell.c = r.c;
            cell.outcome = r.outcome;
            cell.count = 1;
            p.cells.push_back(cell);
        } else {
            ++cit->count;
        }
        ++problems[it->second].n_records;
    }

    NoiseParams noise{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    CowFitResult result;

    for (int t = 0; t < iterations; ++t) {
        // M-step: shared noise from posterior-weighted outcome counts.
        double w[3] = {0, 0, 0};
        for (const Problem& p : problems)
            for (const Cell& cell : p.cells)
                w[outcome_index(cell.outcome)] += static_cast<double>(cell.count) * cell.q_noise;
        const double tot = w[0] + w[1] + w[2];
        if (tot > 0) noise = {w[0] / tot, w[1] / tot, w[2] / tot};

        // M-step per problem: nonparametric oracle per lambda, then the
        // brute-force (lambda, k) argmax of the observed mixture likelihood.
        // Problems are independent here; noise and priors reduce serially.
        parallel_for_each(problems.size(), [&](std::size_t pi) {
            Problem& p = problems[pi];
            double best = kNegInf;
            bool have = false;
            long long best_lambda = 0, best_k = 0;
            NoiseParams best_nonpar;
            for (long long lambda : p.grid->lambdas) {
                const NoiseParams nonpar = nonpar_for_lambda(p, lambda);
                for (long long k : p.grid->ks) {
                    if (!pair_valid(lambda, k, p.L)) continue;
                    double ll = 0.0;
                    for (const Cell& cell : p.cells) {
                        const double mix =
                            hybrid_prob(p, lambda, k, nonpar, cell.c, cell.outcome) *
                                p.prior_oracle +
                            noise.at(cell.outcome) * (1.0 - p.prior_oracle);
                        if (mix <= 0.0) {
                            ll = kNegInf;
                            break;
                        }
                        ll += static_cast<double>(cell.count) * std::log(mix);
                    }
                    // Ties break toward smaller lambda, then smaller k
                    // (candidates are visited in ascending order).
                    if (!have || ll > best) {
                        have = true;
                        best = ll;
                        best_lambda = lambda;
                        best_k = k;
                        best_nonpar = nonpar;
                    }
                }
            }
            p.lambda_star = best_lambda;
            p.k_star = best_k;
            p.nonpar_star = best_nonpar;
            p.hybrid.resize(p.cells.size());
            for (std::size_t i = 0; i < p.cells.size(); ++i)
                p.hybrid[i] = hybrid_prob(p, best_lambda, best_k, best_nonpar, p.cells[i].c,
                                          p.cells[i].outcome);
        });

        // M-step: membership priors as mean posterior.
        for (Problem& p : problems) {
            double acc = 0.0;
            for (const Cell& cell : p.cells) acc += static_cast<double>(cell.count) * cell.q_oracle;
            p.prior_oracle = acc / static_cast<double>(p.n_records);
        }

        // Joint log-likelihood at the updated parameters.
        double joint = 0.0;
        for (Problem& p : problems) {
            double own = 0.0;
            for (std::size_t i = 0; i < p.cells.size(); ++i) {
                const Cell& cell = p.cells[i];
                const double mix = p.hybrid[i] * p.prior_oracle +
                                   noise.at(cell.outcome) * (1.0 - p.prior_oracle);
                if (mix <= 0.0) {
                    own = kNegInf;
                    p.flagged = true;
                    break;
                }
                own += static_cast<double>(cell.count) * std::log(mix);
            }
            p.trace.push_back(own);
            joint += own;
        }
        result.loglik_trace.push_back(joint);

        // E-step: posteriors at the record's own outcome.
        for (Problem& p : problems) {
            for (std::size_t i = 0; i < p.cells.size(); ++i) {
                Cell& cell = p.cells[i];
                const double n_term = noise.at(cell.outcome) * (1.0 - p.prior_oracle);
                const double o_term = p.hybrid[i] * p.prior_oracle;
                const double denom = n_term + o_term;
                if (denom <= 0.0) {
                    cell.q_noise = 0.5;
                    cell.q_oracle = 0.5;
                    p.flagged = true;
                } else {
                    cell.q_noise = n_term / denom;
                    cell.q_oracle = o_term / denom;
                }
            }
        }
    }

    result.noise = noise;
    result.fits.reserve(problems.size());
    for (Problem& p : problems) {
        ProblemFit fit;
        fit.problem_id = p.id;
        fit.lambda_star = p.lambda_star;
        fit.k_star = p.k_star;
        fit.prior_oracle = p.prior_oracle;
        fit.oracle_nonpar = p.nonpar_star;
        for (const Cell& cell : p.cells)
            fit.posteriors.push_back({cell.c, cell.outcome, cell.count, cell.q_oracle,
                                      cell.q_noise});
        fit.loglik_trace = p.trace;
        fit.loglik = p.trace.back();
        fit.flagged = p.flagged;
        result.fits.push_back(std::move(fit));
    }
    return result;
}

double loglik_cow(const std::vector<CowRecord>& records, const ProblemFit& fit,
                  const NoiseParams& noise, long long L) {
    double ll = 0.0;
    for (const CowRecord& r : records) {
        double oracle_p;
        if (fit.lambda_star == 0 || r.c < fit.lambda_star) {
            oracle_p = fit.oracle_nonpar.at(r.outcome);
        } else {
            const double cover_p = cover::pi(fit.lambda_star, fit.k_star, L, r.c);
            oracle_p = r.outcome == scoring::CowOutcome::One
                           ? cover_p
                           : (r.outcome == scoring::CowOutcome::Idk ? 1.0 - cover_p : 0.0);
        }
        const double mix =
            oracle_p * fit.prior_oracle + noise.at(r.outcome) * (1.0 - fit.prior_oracle);
        if (mix <= 0.0) return kNegInf;
        ll += std::log(mix);
    }
    return ll;
}

}  // namespace dolce::em
