#include "dolce/em_pig.hpp"

#include "dolce/cover.hpp"
#include "dolce/errors.hpp"
#include "dolce/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace dolce::em {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Record {
    long long c = 0;
    bool idk = false;
    double s = 0.0;
    YDecomposition y;
    double q_oracle[3];  // posterior q(z=O | y), per y channel {1, 0, idk}
    double q_noise[3];
};

struct LengthOracle {
    double p1 = 1.0 / 3, p0 = 1.0 / 3, p_idk = 1.0 / 3;
};

struct Problem {
    std::string id;
    long long L = 0;
    const CandidateGrid* grid = nullptr;
    std::vector<Record> recs;
    std::vector<long long> unique_cs;
    std::map<long long, LengthOracle> len_oracle;
    double prior_oracle = 0.5;
    long long lambda_star = 0, k_star = 0;
    std::vector<double> trace;
    bool flagged = false;
    // Density node tables: key (lambda,k,c) -> on-grid density values
    // (lambda+1)*rho_tilde(i/lambda); the density is linear between nodes.
    std::unordered_map<long long, std::vector<double>> dens_nodes;
};

const std::vector<double>& node_table(Problem& p, long long lambda, long long k, long long c) {
    const long long key = ((lambda << 21) | k) << 21 | c;
    auto it = p.dens_nodes.find(key);
    if (it != p.dens_nodes.end()) return it->second;
    std::vector<double> nodes(static_cast<std::size_t>(lambda) + 1);
    for (long long i = 0; i <= lambda; ++i)
        nodes[static_cast<std::size_t>(i)] =
            static_cast<double>(lambda + 1) *
            rat_to_double(cover::rho_tilde_exact(i, lambda, k, p.L, c));
    return p.dens_nodes.emplace(key, std::move(nodes)).first->second;
}

/// rho(s, lambda, k; L, c) via the cached node table (linear interpolation
/// between on-grid density values equals the kernel's interpolation rule).
double density_at(Problem& p, long long lambda, long long k, long long c, double s) {
    if (lambda < 1) return 0.0;
    const std::vector<double>& nodes = node_table(p, lambda, k, c);
    if (s <= 0.0) return nodes.front();
    if (s >= 1.0) return nodes.back();
    const double grid = s * static_cast<double>(lambda);
    const std::size_t lo = static_cast<std::size_t>(grid);
    const double frac = grid - static_cast<double>(lo);
    if (lo + 1 >= nodes.size()) return nodes.back();
    return nodes[lo] * (1.0 - frac) + nodes[lo + 1] * frac;
}

double channel(const YDecomposition& y, int i) {
    return i == 0 ? y.y1 : (i == 1 ? y.y0 : y.y_idk);
}

double noise_channel(const NoiseParams& n, int i) {
    return i == 0 ? n.p1 : (i == 1 ? n.p0 : n.p_idk);
}

double oracle_channel(const LengthOracle& o, int i) {
    return i == 0 ? o.p1 : (i == 1 ? o.p0 : o.p_idk);
}

/// argmax_s rho(s, lambda, k; L, c): the density is piecewise linear in s,
/// so the maximum sits on a grid node i/lambda; ties take the smallest s.
double anchor_for(long long lambda, long long k, long long L, long long c) {
    double best_s = 0.0;
    BigRat best(-1);
    for (long long i = 0; i <= lambda; ++i) {
        BigRat v = cover::rho_tilde_exact(i, lambda, k, L, c);
        if (v > best) {
            best = v;
            best_s = static_cast<double>(i) / static_cast<double>(lambda);
        }
    }
    return best_s;
}

}  // namespace

YDecomposition y_decompose(bool idk, double s) {
    if (idk) return {0.0, 1.0, 0.0};
    if (s < 0.0 || s > 1.0) throw InputError("y_decompose: score outside [0,1]");
    return {s, 0.0, 1.0 - s};
}

PigFitResult fit_pig(const std::vector<PigRecord>& records,
                     const std::map<std::string, CandidateGrid>& grids,
                     const std::map<std::string, long long>& context_lengths,
                     int iterations) {
    if (records.empty()) throw InputError("fit_pig: empty task");
    if (iterations < 1) throw InputError("fit_pig: iterations must be >= 1");

    std::vector<Problem> problems;
    std::unordered_map<std::string, std::size_t> index;
    for (const PigRecord& r : records) {
        auto [it, fresh] = index.try_emplace(r.problem_id, problems.size());
        if (fresh) {
            Problem p;
            p.id = r.problem_id;
            auto git = grids.find(r.problem_id);
            auto lit = context_lengths.find(r.problem_id);
            if (git == grids.end() || lit == context_lengths.end())
                throw InputError("fit_pig: missing grid or context length for problem " +
                                 r.problem_id);
            p.grid = &git->second;
            p.L = lit->second;
            problems.push_back(std::move(p));
        }
        Record rec;
        rec.c = r.c;
        rec.idk = r.idk;
        rec.s = r.s;
        rec.y = y_decompose(r.idk, r.s);
        for (int i = 0; i < 3; ++i) {
            rec.q_oracle[i] = 0.5;
            rec.q_noise[i] = 0.5;
        }
        problems[it->second].recs.push_back(rec);
    }
    for (Problem& p : problems) {
        for (const Record& r : p.recs) p.unique_cs.push_back(r.c);
        std::sort(p.unique_cs.begin(), p.unique_cs.end());
        p.unique_cs.erase(std::unique(p.unique_cs.begin(), p.unique_cs.end()),
                          p.unique_cs.end());
    }

    NoiseParams noise{1.0 / 3, 1.0 / 3, 1.0 / 3};
    PigFitResult result;

    for (int t = 0; t < iterations; ++t) {
        // M-step: y-level shared noise.
        double w[3] = {0, 0, 0};
        for (const Problem& p : problems)
            for (const Record& r : p.recs)
                for (int i = 0; i < 3; ++i) w[i] += r.q_noise[i] * channel(r.y, i);
        const double tot = w[0] + w[1] + w[2];
        if (tot > 0) noise = {w[0] / tot, w[1] / tot, w[2] / tot};

        // Independent per-problem work; the shared-noise and trace
        // reductions below stay serial.
        parallel_for_each(problems.size(), [&](std::size_t pi) {
            Problem& p = problems[pi];
            // M-step: per-length oracle channel probabilities.
            for (long long c : p.unique_cs) {
                double ow[3] = {0, 0, 0};
                for (const Record& r : p.recs) {
                    if (r.c != c) continue;
                    for (int i = 0; i < 3; ++i) ow[i] += r.q_oracle[i] * channel(r.y, i);
                }
                const double osum = ow[0] + ow[1] + ow[2];
                LengthOracle lo;
                if (osum > 0) {
                    lo.p1 = ow[0] / osum;
                    lo.p0 = ow[1] / osum;
                    lo.p_idk = ow[2] / osum;
                }
                p.len_oracle[c] = lo;
            }

            // Brute-force argmax over (lambda, k) of the mixture density
            // product, with the oracle density evaluated at each record's
            // observed score; IDK records enter only through the y channels.
            double best = kNegInf;
            bool have = false;
            long long best_lambda = 0, best_k = 0;
            for (long long lambda : p.grid->lambdas) {
                for (long long k : p.grid->ks) {
                    if (!(lambda == 0 && k == 0) &&
                        !(lambda >= 1 && k >= 1 && lambda * k <= p.L))
                        continue;
                    double ll = 0.0;
                    for (const Record& r : p.recs) {
                        if (r.idk) continue;
                        const double dens =
                            lambda == 0 ? 0.0 : density_at(p, lambda, k, r.c, r.s);
                        const double mix = dens * p.prior_oracle + 1.0 * (1.0 - p.prior_oracle);
                        if (mix <= 0.0) {
                            ll = kNegInf;
                            break;
                        }
                        ll += std::log(mix);
                    }
                    if (!have || ll > best) {  // ascending scan: ties keep smaller lambda, k
                        have = true;
                        best = ll;
                        best_lambda = lambda;
                        best_k = k;
                    }
                }
            }
            p.lambda_star = best_lambda;
            p.k_star = best_k;

            // Re-anchor P(y=1|O) at the density argmax and renormalize the
            // remaining mass over {0, idk} proportionally.
            if (best_lambda >= 1) {
                for (long long c : p.unique_cs) {
                    LengthOracle& lo = p.len_oracle[c];
                    const double anchored = anchor_for(best_lambda, best_k, p.L, c);
                    const double rest_old = lo.p0 + lo.p_idk;
                    if (rest_old > 0) {
                        lo.p0 = (1.0 - anchored) * lo.p0 / rest_old;
                        lo.p_idk = (1.0 - anchored) * lo.p_idk / rest_old;
                    } else {
                        lo.p0 = (1.0 - anchored) / 2.0;
                        lo.p_idk = (1.0 - anchored) / 2.0;
                    }
                    lo.p1 = anchored;
                }
            }
        });

        // M-step: priors as mean posterior mass.
        for (Problem& p : problems) {
            double acc = 0.0;
            for (const Record& r : p.recs)
                for (int i = 0; i < 3; ++i) acc += r.q_oracle[i] * channel(r.y, i);
            p.prior_oracle = acc / static_cast<double>(p.recs.size());
        }

        // Joint log-density at the current parameters.
        double joint = 0.0;
        for (Problem& p : problems) {
            double own = 0.0;
            for (const Record& r : p.recs) {
                double mix;
                if (r.idk) {
                    mix = p.len_oracle[r.c].p_idk * p.prior_oracle +
                          noise.p_idk * (1.0 - p.prior_oracle);
                } else {
                    const double dens = p.lambda_star == 0
                                            ? 0.0
                                            : density_at(p, p.lambda_star, p.k_star, r.c, r.s);
                    mix = dens * p.prior_oracle + 1.0 * (1.0 - p.prior_oracle);
                }
                if (mix <= 0.0) {
                    own = kNegInf;
                    p.flagged = true;
                    break;
                }
                own += std::log(mix);
            }
            p.trace.push_back(own);
            joint += own;
        }
        result.loglik_trace.push_back(joint);

        // E-step: y-level posteriors against the anchored oracle.
        for (Problem& p : problems) {
            for (Record& r : p.recs) {
                const LengthOracle& lo = p.len_oracle[r.c];
                for (int i = 0; i < 3; ++i) {
                    const double n_term = noise_channel(noise, i) * (1.0 - p.prior_oracle);
                    const double o_term = oracle_channel(lo, i) * p.prior_oracle;
                    const double denom = n_term + o_term;
                    if (denom <= 0.0) {
                        r.q_noise[i] = 0.5;
                        r.q_oracle[i] = 0.5;
                    } else {
                        r.q_noise[i] = n_term / denom;
                        r.q_oracle[i] = o_term / denom;
                    }
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
        for (const auto& [c, lo] : p.len_oracle) {
            fit.anchored_s[c] = lo.p1;
            fit.length_oracle[c] = NoiseParams{lo.p1, lo.p0, lo.p_idk};
        }
        fit.loglik_trace = p.trace;
        fit.loglik = p.trace.back();
        fit.flagged = p.flagged;
        result.fits.push_back(std::move(fit));
    }
    return result;
}

double loglik_pig(const std::vector<PigRecord>& records, const ProblemFit& fit,
                  const NoiseParams& noise, long long L) {
    double ll = 0.0;
    for (const PigRecord& r : records) {
        auto oit = fit.length_oracle.find(r.c);
        if (oit == fit.length_oracle.end())
            throw InputError("loglik_pig: no fitted oracle for observation length " +
                             std::to_string(r.c));
        double mix;
        if (r.idk) {
            mix = oit->second.p_idk * fit.prior_oracle + noise.p_idk * (1.0 - fit.prior_oracle);
        } else {
            const double dens = fit.lambda_star == 0
                                    ? 0.0
                                    : cover::rho(r.s, fit.lambda_star, fit.k_star, L, r.c);
            mix = dens * fit.prior_oracle + 1.0 * (1.0 - fit.prior_oracle);
        }
        if (mix <= 0.0) return kNegInf;
        ll += std::log(mix);
    }
    return ll;
}

}  // namespace dolce::em
