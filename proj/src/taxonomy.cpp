#include "dolce/taxonomy.hpp"

#include "dolce/errors.hpp"

#include <algorithm>
#include <set>

namespace dolce::taxonomy {

const char* to_string(FocusCategory c) {
    switch (c) {
        case FocusCategory::I: return "I";
        case FocusCategory::II: return "II";
        case FocusCategory::III: return "III";
        case FocusCategory::IV: return "IV";
        case FocusCategory::V: return "V";
    }
    return "?";
}

FocusCategory category_from_string(const std::string& name) {
    if (name == "I") return FocusCategory::I;
    if (name == "II") return FocusCategory::II;
    if (name == "III") return FocusCategory::III;
    if (name == "IV") return FocusCategory::IV;
    if (name == "V") return FocusCategory::V;
    throw InputError("unknown focus category: " + name);
}

Thresholds thresholds_from_lengths(const std::vector<long long>& lengths, long long L) {
    std::set<long long> ladder(lengths.begin(), lengths.end());
    ladder.erase(0);
    if (ladder.empty()) throw ConfigError("thresholds: ladder has no nonzero lengths");
    const long long max_c = *ladder.rbegin();

    std::vector<long long> core;
    for (long long c : ladder)
        if (c != max_c + 1 && c != L) core.push_back(c);
    if (core.empty()) core.push_back(max_c);  // full-context-only ladders keep their one length

    Thresholds thr;
    const std::size_t idx = core.size() / 3;  // zero-based first tertile
    thr.lambda_p = core[idx];
    thr.k_p = core[idx];
    thr.lambda_q = core.back();
    return thr;
}

FocusCategory assign(long long lambda, long long k, const Thresholds& thr, long long L) {
    if (lambda < 0 || k < 0) throw InputError("assign: negative parameter");
    if ((lambda == 0) != (k == 0)) throw InputError("assign: lambda = 0 iff k = 0");
    if (lambda > L || lambda * k > L) throw InputError("assign: infeasible (lambda, k) for L");

    if (lambda == 0) return FocusCategory::I;
    if (lambda <= thr.lambda_p) return k > thr.k_p ? FocusCategory::II : FocusCategory::III;
    if (lambda <= thr.lambda_q) return FocusCategory::IV;
    return FocusCategory::V;
}

}  // namespace dolce::taxonomy
