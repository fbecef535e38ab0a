#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dolce::corpus {

// A context split into ordered units. Separators (and any leading slack) are
// kept so that join() reproduces the source text byte-for-byte.
struct UnitizedContext {
    std::string problem_id;
    std::string spec_id;
    std::vector<std::string> units;
    std::string leading_sep;
    std::vector<std::string> seps;  // separator following units[i]; same size as units

    long long length() const { return static_cast<long long>(units.size()); }
    std::string join() const;
    /// Joins units[first .. first+count-1] with their internal separators
    /// (no leading or trailing separator). first is 0-based.
    std::string join_range(std::size_t first, std::size_t count) const;
};

/// Known spec ids: b c l n o q r s t u (single characters, composable into
/// strings like "ls" or "rlt"; each stage splits the units of the previous
/// one, "r" rewrites commas to periods for boundary detection only).
bool known_unit_spec(char id);
std::string describe_unit_spec(char id);

UnitizedContext split_units(const std::string& text, const std::string& spec_id,
                            const std::string& problem_id = "");

// Observation span: start is a 1-indexed unit position; len == 0 is the
// zero-context probe and carries no start.
struct Span {
    long long start = 0;
    long long len = 0;
};

struct PlanStrategy {
    enum class Kind {
        ExhaustiveAll,
        TakeEvery,
        SampleRate,
        TakeInvProp,
        SampleInvProp,
        LengthSubset,
    };
    Kind kind = Kind::ExhaustiveAll;
    long long step = 1;   // TakeEvery
    double rate = 1.0;    // SampleRate
    double base = 1.0;    // TakeInvProp / SampleInvProp
    std::vector<long long> keep_lengths;        // LengthSubset: explicit keep set
    std::optional<long long> min_len, max_len;  // LengthSubset: bounds (if no set)
};

struct SpanPlan {
    std::string problem_id;
    std::vector<Span> spans;
    std::vector<long long> lengths;  // the configured ladder
};

/// Lengths above L are dropped; a ladder entry equal to L maps to the single
/// full-context span. Deterministic given (L, lengths, strategy, seed).
SpanPlan build_plan(long long L, std::vector<long long> lengths, const PlanStrategy& strategy,
                    std::uint64_t seed, const std::string& problem_id = "");

enum class IdkStyle { Unanswerable, ChoiceE, None };

std::string render_prompt(const std::string& instruction, const UnitizedContext& ctx,
                          const Span& span, const std::string& question, IdkStyle idk);

}  // namespace dolce::corpus
