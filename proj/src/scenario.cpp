#include "dolce/scenario.hpp"

#include "dolce/errors.hpp"
#include "dolce/rng.hpp"

#include <algorithm>
#include <cmath>

namespace dolce::scenario {

namespace {

// Distinct sorted values with cumulative fractions; the whole dip
// computation runs on this weighted form.
struct Steps {
    std::vector<double> v;    // distinct values, ascending
    std::vector<double> cum;  // cum[j] = F(v[j]); cum.back() == 1
};

Steps to_steps(const std::vector<double>& sorted) {
    Steps st;
    const double n = static_cast<double>(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (st.v.empty() || sorted[i] != st.v.back()) {
            st.v.push_back(sorted[i]);
            st.cum.push_back(0.0);
        }
        st.cum.back() = static_cast<double>(i + 1) / n;
    }
    return st;
}

// A monotone (nondecreasing, convex) function has to thread the gate
// [bottom_j, top_j] at each v_j, where top is the pre-jump value + delta and
// bottom is the post-jump value - delta. full[t] marks prefixes 1..t passable
// with the pinch at t enforced; relax[t] with the jump at t absorbed (t is
// the mode). Returns vectors of size m+1 (index 0 = empty prefix).
struct ThreadResult {
    std::vector<char> full, relax;
};

ThreadResult thread_convex(const std::vector<double>& v, const std::vector<double>& cum,
                           double delta) {
    const std::size_t m = v.size();
    constexpr double kTiny = 1e-12;
    ThreadResult out;
    out.full.assign(m + 1, 0);
    out.relax.assign(m + 1, 0);
    out.full[0] = 1;

    std::vector<double> top(m), bottom(m);
    for (std::size_t j = 0; j < m; ++j) {
        const double prev = j == 0 ? 0.0 : cum[j - 1];
        top[j] = prev + delta;
        bottom[j] = cum[j] - delta;
    }

    // Greatest convex minorant of the gate tops, built incrementally; after
    // each insertion, earlier bottoms under re-hulled segments are rechecked.
    std::vector<std::size_t> hull;
    bool core_ok = true;
    for (std::size_t t = 0; t < m; ++t) {
        while (hull.size() >= 2) {
            const std::size_t a = hull[hull.size() - 2], b = hull.back();
            const double lhs = (top[b] - top[a]) * (v[t] - v[b]);
            const double rhs = (top[t] - top[b]) * (v[b] - v[a]);
            if (lhs >= rhs - kTiny)
                hull.pop_back();
            else
                break;
        }
        if (core_ok && !hull.empty()) {
            const std::size_t a = hull.back();
            const double run = v[t] - v[a];
            for (std::size_t j = a + 1; j < t && core_ok; ++j) {
                const double at = top[a] + (top[t] - top[a]) * (v[j] - v[a]) / run;
                if (at < bottom[j] - kTiny) core_ok = false;
            }
        }
        hull.push_back(t);

        out.relax[t + 1] = core_ok ? 1 : 0;
        const double jump = cum[t] - (t == 0 ? 0.0 : cum[t - 1]);
        out.full[t + 1] = (core_ok && jump <= 2 * delta + kTiny) ? 1 : 0;
        // Gate t stops being the (relaxable) end gate from now on; its own
        // pinch becomes a permanent constraint. If a later insertion pops it
        // off the hull, the segment recheck above re-validates its bottom.
        core_ok = out.full[t + 1] != 0;
    }
    return out;
}

bool dip_feasible(const Steps& st, double delta) {
    const std::size_t m = st.v.size();

    ThreadResult left = thread_convex(st.v, st.cum, delta);

    // The concave side is the mirror image: flip x and y.
    std::vector<double> mv(m), mcum(m);
    for (std::size_t j = 0; j < m; ++j) {
        mv[j] = -st.v[m - 1 - j];
        mcum[j] = j + 1 == m ? 1.0 : 1.0 - st.cum[m - 2 - j];
    }
    ThreadResult mirrored = thread_convex(mv, mcum, delta);

    auto right_full = [&](std::size_t t) {  // gates t..m-1 threadable, 0-based; t == m -> empty
        return mirrored.full[m - t] != 0;
    };
    auto right_relax = [&](std::size_t t) { return mirrored.relax[m - t] != 0; };

    // Mode at a data point: the jump there is absorbed on both sides.
    for (std::size_t t = 0; t < m; ++t)
        if (left.relax[t + 1] && right_relax(t)) return true;
    // Mode strictly between points (or outside the range).
    for (std::size_t t = 0; t <= m; ++t)
        if (left.full[t] && right_full(t)) return true;
    return false;
}

}  // namespace

ScoreHistogram bucketize(const std::vector<double>& scores) {
    ScoreHistogram h;
    for (double s : scores) {
        if (std::isnan(s)) throw InputError("bucketize: NaN score");
        double clamped = std::min(1.0, std::max(0.0, s));
        int bin = std::min(9, static_cast<int>(clamped * 10.0));
        ++h.bins[static_cast<std::size_t>(bin)];
        ++h.n;
    }
    return h;
}

std::vector<double> midpoint_sample(const ScoreHistogram& hist) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(hist.n));
    for (std::size_t b = 0; b < hist.bins.size(); ++b) {
        const double mid = (static_cast<double>(b) + 0.5) / 10.0;
        for (long long i = 0; i < hist.bins[b]; ++i) out.push_back(mid);
    }
    return out;
}

double dip_statistic(std::vector<double> sample) {
    if (sample.size() < 2) throw InputError("dip_statistic: need at least 2 values");
    std::sort(sample.begin(), sample.end());
    const Steps st = to_steps(sample);
    const double floor = 0.5 / static_cast<double>(sample.size());

    if (st.v.size() == 1) return floor;  // point mass

    double lo = 0.0, hi = 0.25;
    if (!dip_feasible(st, hi)) hi = 0.5;  // paranoia; 0.25 bounds the dip
    for (int iter = 0; iter < 50; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (dip_feasible(st, mid))
            hi = mid;
        else
            lo = mid;
    }
    return std::max(hi, floor);
}

DipResult dip_pvalue(const std::vector<double>& sample, int n_mc, std::uint64_t seed) {
    if (n_mc < 100) throw InputError("dip_pvalue: n_mc must be >= 100");
    DipResult res;
    res.dip = dip_statistic(std::vector<double>(sample));

    const std::size_t n = sample.size();
    long long at_least = 0;
    for (int b = 0; b < n_mc; ++b) {
        Rng rng(seed, static_cast<std::uint64_t>(b));
        std::vector<double> null_sample(n);
        for (auto& x : null_sample) x = rng.next_double();
        if (dip_statistic(std::move(null_sample)) >= res.dip) ++at_least;
    }
    res.p = static_cast<double>(at_least) / static_cast<double>(n_mc);
    return res;
}

const char* to_string(Label l) { return l == Label::COW ? "cow" : "pig"; }

ClassifyResult classify(const std::vector<double>& scores, int n_mc, std::uint64_t seed) {
    ClassifyResult res;
    if (scores.size() < 2) {
        res.label = Label::COW;
        res.degenerate = true;
        return res;
    }
    const auto sample = midpoint_sample(bucketize(scores));
    const DipResult d = dip_pvalue(sample, n_mc, seed);
    res.dip = d.dip;
    res.p = d.p;
    res.label = d.p < 0.5 ? Label::COW : Label::PIG;
    return res;
}

std::vector<Label> apply_task_rule(const std::vector<Label>& labels, long long min_side) {
    long long cow = 0, pig = 0;
    for (Label l : labels) (l == Label::COW ? cow : pig)++;
    if (cow > min_side && pig > min_side) return labels;
    const Label majority = pig > cow ? Label::PIG : Label::COW;
    return std::vector<Label>(labels.size(), majority);
}

}  // namespace dolce::scenario
