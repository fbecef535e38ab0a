#include "dolce/synth.hpp"

#include "dolce/cover.hpp"
#include "dolce/errors.hpp"
#include "dolce/rng.hpp"

#include <cmath>
#include <map>

namespace dolce::synth {

namespace {

using scoring::CowOutcome;

void validate(const SynthSpec& spec) {
    if (spec.L < 0) throw InputError("synth: negative L");
    const bool cbzs = spec.lambda == 0 && spec.k == 0;
    if (!cbzs && (spec.lambda < 1 || spec.k < 1 || spec.lambda * spec.k > spec.L))
        throw InputError("synth: invalid (lambda, k) for L");
    auto simplex = [](const em::NoiseParams& p) {
        return p.p1 >= 0 && p.p0 >= 0 && p.p_idk >= 0 &&
               std::fabs(p.p1 + p.p0 + p.p_idk - 1.0) < 1e-9;
    };
    if (!simplex(spec.noise)) throw InputError("synth: noise is not a probability simplex");
    if (spec.prior_oracle < 0 || spec.prior_oracle > 1)
        throw InputError("synth: prior outside [0,1]");
    for (const corpus::Span& span : spec.plan.spans)
        if (span.len > 0 && (span.start < 1 || span.start + span.len - 1 > spec.L))
            throw InputError("synth: plan span outside context");
}

CowOutcome draw_outcome(const em::NoiseParams& p, double u) {
    if (u < p.p1) return CowOutcome::One;
    if (u < p.p1 + p.p0) return CowOutcome::Zero;
    return CowOutcome::Idk;
}

}  // namespace

std::vector<em::CowRecord> gen_cow(const SynthSpec& spec) {
    if (spec.scenario != SynthSpec::Scenario::COW)
        throw InputError("gen_cow: spec scenario is not COW");
    validate(spec);
    if (std::fabs(spec.oracle_nonpar.p1 + spec.oracle_nonpar.p0 + spec.oracle_nonpar.p_idk -
                  1.0) > 1e-9)
        throw InputError("gen_cow: oracle_nonpar is not a probability simplex");

    std::map<long long, double> pi_by_c;
    std::vector<em::CowRecord> out;
    out.reserve(spec.plan.spans.size());
    for (std::size_t idx = 0; idx < spec.plan.spans.size(); ++idx) {
        const corpus::Span& span = spec.plan.spans[idx];
        Rng rng(spec.seed, static_cast<std::uint64_t>(idx));
        em::CowRecord rec;
        rec.problem_id = spec.problem_id;
        rec.c = span.len;
        const bool oracle = rng.next_double() < spec.prior_oracle;
        const double u = rng.next_double();
        if (!oracle) {
            rec.outcome = draw_outcome(spec.noise, u);
        } else if (spec.lambda == 0 || span.len < spec.lambda) {
            rec.outcome = draw_outcome(spec.oracle_nonpar, u);
        } else {
            auto it = pi_by_c.find(span.len);
            if (it == pi_by_c.end())
                it = pi_by_c.emplace(span.len,
                                     cover::pi(spec.lambda, spec.k, spec.L, span.len)).first;
            rec.outcome = u < it->second ? CowOutcome::One : CowOutcome::Idk;
        }
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<em::PigRecord> gen_pig(const SynthSpec& spec) {
    if (spec.scenario != SynthSpec::Scenario::PIG)
        throw InputError("gen_pig: spec scenario is not PIG");
    if (spec.lambda == 0 && spec.prior_oracle > 0)
        throw InputError("gen_pig: oracle draws need lambda >= 1");
    validate(spec);

    // Exact pmf over {0, 1/lambda, ..., 1} per observation length, cached.
    std::map<long long, std::vector<double>> pmf_by_c;
    auto pmf_for = [&](long long c) -> const std::vector<double>& {
        auto it = pmf_by_c.find(c);
        if (it != pmf_by_c.end()) return it->second;
        std::vector<double> pmf(static_cast<std::size_t>(spec.lambda) + 1);
        for (long long i = 0; i <= spec.lambda; ++i)
            pmf[static_cast<std::size_t>(i)] =
                rat_to_double(cover::rho_tilde_exact(i, spec.lambda, spec.k, spec.L, c));
        return pmf_by_c.emplace(c, std::move(pmf)).first->second;
    };

    auto draw_pmf = [&](long long c, double u) {
        const std::vector<double>& pmf = pmf_for(c);
        double acc = 0.0;
        long long i = 0;
        for (; i < spec.lambda; ++i) {
            acc += pmf[static_cast<std::size_t>(i)];
            if (u < acc) break;
        }
        return static_cast<double>(i) / static_cast<double>(spec.lambda);
    };

    // Inverse-CDF draw from the piecewise-linear density through the node
    // values (lambda+1)*pmf[i], explicitly normalized.
    auto draw_density = [&](long long c, double u) {
        const std::vector<double>& pmf = pmf_for(c);
        const std::size_t n_seg = static_cast<std::size_t>(spec.lambda);
        const double width = 1.0 / static_cast<double>(spec.lambda);
        double total = 0.0;
        for (std::size_t i = 0; i < n_seg; ++i) total += 0.5 * (pmf[i] + pmf[i + 1]) * width;
        double target = u * total;
        for (std::size_t i = 0; i < n_seg; ++i) {
            const double area = 0.5 * (pmf[i] + pmf[i + 1]) * width;
            if (target > area && i + 1 < n_seg) {
                target -= area;
                continue;
            }
            const double a = pmf[i], b = pmf[i + 1];
            double x;
            if (std::fabs(b - a) < 1e-15) {
                x = a > 0 ? target / a : 0.5 * width;
            } else {
                // solve a*x + (b-a)*x^2/(2w) = target
                const double slope = (b - a) / width;
                const double disc = a * a + 2.0 * slope * target;
                x = (std::sqrt(std::max(0.0, disc)) - a) / slope;
            }
            x = std::min(std::max(x, 0.0), width);
            return static_cast<double>(i) * width + x;
        }
        return 1.0;
    };

    std::vector<em::PigRecord> out;
    out.reserve(spec.plan.spans.size());
    for (std::size_t idx = 0; idx < spec.plan.spans.size(); ++idx) {
        const corpus::Span& span = spec.plan.spans[idx];
        Rng rng(spec.seed, static_cast<std::uint64_t>(idx));
        em::PigRecord rec;
        rec.problem_id = spec.problem_id;
        rec.c = span.len;
        const bool oracle = rng.next_double() < spec.prior_oracle;
        const double u = rng.next_double();
        if (!oracle) {
            rec.s = u;
        } else if (spec.pig_draw == SynthSpec::PigDraw::GridPmf) {
            rec.s = draw_pmf(span.len, u);
        } else {
            rec.s = draw_density(span.len, u);
        }
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace dolce::synth
