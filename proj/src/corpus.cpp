#include "dolce/corpus.hpp"

#include "dolce/errors.hpp"
#include "dolce/rng.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <regex>
#include <set>
#include <unordered_set>

namespace dolce::corpus {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool all_space(const std::string& s, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i)
        if (!is_space(s[i])) return false;
    return true;
}

// Half-open byte range into the source text.
struct Range {
    std::size_t begin = 0, end = 0;
};

// Boundaries of one splitting pass: separator ranges (possibly zero-width),
// sorted and non-overlapping, all inside the unit being split.
using SepList = std::vector<Range>;

SepList split_regex_seps(const std::string& shadow, std::size_t begin, std::size_t end,
                         const std::regex& re) {
    SepList seps;
    auto first = shadow.cbegin() + static_cast<long>(begin);
    auto last = shadow.cbegin() + static_cast<long>(end);
    for (std::sregex_iterator it(first, last, re), done; it != done; ++it) {
        std::size_t b = begin + static_cast<std::size_t>(it->position(0));
        seps.push_back({b, b + static_cast<std::size_t>(it->length(0))});
    }
    return seps;
}

// Zero-width boundary just before each match of `re`.
SepList split_before_match(const std::string& shadow, std::size_t begin, std::size_t end,
                           const std::regex& re) {
    SepList seps;
    auto first = shadow.cbegin() + static_cast<long>(begin);
    auto last = shadow.cbegin() + static_cast<long>(end);
    for (std::sregex_iterator it(first, last, re), done; it != done; ++it) {
        std::size_t b = begin + static_cast<std::size_t>(it->position(0));
        if (b > begin) seps.push_back({b, b});
    }
    return seps;
}

SepList split_lines(const std::string& shadow, std::size_t begin, std::size_t end,
                    int every) {
    SepList seps;
    int seen = 0;
    for (std::size_t i = begin; i < end; ++i) {
        if (shadow[i] == '\n') {
            ++seen;
            if (seen % every == 0) seps.push_back({i, i + 1});
        }
    }
    return seps;
}

const std::unordered_set<std::string>& abbreviation_stoplist() {
    static const std::unordered_set<std::string> stop = {
        "mr",  "mrs", "ms",  "dr",   "prof", "sr",  "jr",   "st",  "vs",
        "etc", "eg",  "ie",  "fig",  "figs", "al",  "inc",  "ltd", "co",
        "corp", "no", "nos", "vol",  "vols", "pp",  "p",    "approx", "dept",
        "est", "min", "max", "sec",  "mt",   "gen", "col",  "lt",  "sgt",
    };
    return stop;
}

bool looks_like_abbreviation(const std::string& shadow, std::size_t unit_begin,
                             std::size_t dot) {
    // Token containing the terminator, periods stripped, lowercased.
    std::size_t t = dot;
    while (t > unit_begin && !is_space(shadow[t - 1])) --t;
    std::string token;
    for (std::size_t i = t; i < dot; ++i) {
        char c = shadow[i];
        if (c == '.' || c == ',' || c == '(' || c == '"' || c == '\'') continue;
        token.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    if (token.empty()) return false;
    if (token.size() == 1 && std::isupper(static_cast<unsigned char>(shadow[dot - 1])))
        return true;  // single initial, "J."
    return abbreviation_stoplist().count(token) > 0;
}

// Rule-based sentence boundaries. strict=true (spec "s") additionally
// requires the next sentence to open with a capital, digit or quote;
// strict=false (spec "t", pretokenized input) splits after any terminator
// followed by whitespace.
SepList split_sentences(const std::string& shadow, std::size_t begin, std::size_t end,
                        bool strict) {
    SepList seps;
    std::size_t i = begin;
    while (i < end) {
        char c = shadow[i];
        if (c != '.' && c != '!' && c != '?') {
            ++i;
            continue;
        }
        // Absorb a run of terminators and closing punctuation.
        std::size_t j = i;
        while (j + 1 < end && (shadow[j + 1] == '.' || shadow[j + 1] == '!' ||
                               shadow[j + 1] == '?' || shadow[j + 1] == '"' ||
                               shadow[j + 1] == '\'' || shadow[j + 1] == ')' ||
                               shadow[j + 1] == ']'))
            ++j;
        std::size_t ws = j + 1;
        if (ws >= end || !is_space(shadow[ws])) {
            i = j + 1;
            continue;
        }
        std::size_t ws_end = ws;
        while (ws_end < end && is_space(shadow[ws_end])) ++ws_end;
        if (ws_end >= end) break;  // trailing whitespace, no boundary needed
        if (strict) {
            char nxt = shadow[ws_end];
            bool opener = std::isupper(static_cast<unsigned char>(nxt)) ||
                          std::isdigit(static_cast<unsigned char>(nxt)) || nxt == '"' ||
                          nxt == '\'' || nxt == '(';
            if (!opener) {
                i = ws_end;
                continue;
            }
        }
        if (c == '.' && looks_like_abbreviation(shadow, begin, i)) {
            i = ws_end;
            continue;
        }
        seps.push_back({ws, ws_end});
        i = ws_end;
    }
    return seps;
}

SepList boundaries_for(char spec, const std::string& shadow, std::size_t begin,
                       std::size_t end) {
    static const std::regex re_blocks(R"((?:\n *){2,})");
    static const std::regex re_review(R"(Review #\d+)");
    static const std::regex re_passage_n(R"(Passage \d+:)");
    static const std::regex re_passage(R"(Passage:)");
    static const std::regex re_dialogue(R"(Dialogue:)");
    switch (spec) {
        case 'b': return split_regex_seps(shadow, begin, end, re_blocks);
        case 'l': return split_lines(shadow, begin, end, 1);
        case 'c': return split_lines(shadow, begin, end, 2);
        case 'n': return split_before_match(shadow, begin, end, re_review);
        case 'o': return split_before_match(shadow, begin, end, re_passage_n);
        case 'q': return split_before_match(shadow, begin, end, re_passage);
        case 'u': return split_before_match(shadow, begin, end, re_dialogue);
        case 's': return split_sentences(shadow, begin, end, true);
        case 't': return split_sentences(shadow, begin, end, false);
        default: throw ConfigError(std::string("unknown unit spec id '") + spec + "'");
    }
}

}  // namespace

bool known_unit_spec(char id) {
    switch (id) {
        case 'b': case 'c': case 'l': case 'n': case 'o':
        case 'q': case 'r': case 's': case 't': case 'u': return true;
        default: return false;
    }
}

std::string describe_unit_spec(char id) {
    switch (id) {
        case 'b': return "blocks separated by multi-line breaks";
        case 'c': return "pairs of lines";
        case 'l': return "lines";
        case 'n': return "reviews (Review #N)";
        case 'o': return "numbered passages (Passage N:)";
        case 'q': return "passage/question/answer triplets";
        case 'r': return "comma-to-period preprocessor";
        case 's': return "sentences (rule-based)";
        case 't': return "sentences from pretokenized text (rule-based)";
        case 'u': return "dialogue/summary pairs";
        default: return "unknown";
    }
}

std::string UnitizedContext::join() const {
    std::string out = leading_sep;
    for (std::size_t i = 0; i < units.size(); ++i) {
        out += units[i];
        out += seps[i];
    }
    return out;
}

std::string UnitizedContext::join_range(std::size_t first, std::size_t count) const {
    std::string out;
    for (std::size_t i = first; i < first + count && i < units.size(); ++i) {
        if (i > first) out += seps[i - 1];
        out += units[i];
    }
    return out;
}

UnitizedContext split_units(const std::string& text, const std::string& spec_id,
                            const std::string& problem_id) {
    if (spec_id.empty()) throw ConfigError("empty unit spec");
    for (char c : spec_id)
        if (!known_unit_spec(c)) throw ConfigError(std::string("unknown unit spec id '") + c + "'");

    UnitizedContext ctx;
    ctx.problem_id = problem_id;
    ctx.spec_id = spec_id;
    if (text.empty()) return ctx;

    // Boundary detection runs on a shadow copy ("r" rewrites it in place);
    // unit and separator bytes always come from the original text, so the
    // round-trip is lossless for every spec.
    std::string shadow = text;

    struct Piece {
        Range range;
        bool is_sep;
    };
    std::vector<Piece> pieces{{{0, text.size()}, false}};

    for (char spec : spec_id) {
        if (spec == 'r') {
            for (char& c : shadow)
                if (c == ',') c = '.';
            continue;
        }
        std::vector<Piece> next;
        next.reserve(pieces.size());
        for (const Piece& piece : pieces) {
            if (piece.is_sep) {
                next.push_back(piece);
                continue;
            }
            SepList seps = boundaries_for(spec, shadow, piece.range.begin, piece.range.end);
            std::size_t cursor = piece.range.begin;
            for (const Range& sep : seps) {
                next.push_back({{cursor, sep.begin}, false});
                if (sep.end > sep.begin) next.push_back({{sep.begin, sep.end}, true});
                cursor = sep.end;
            }
            next.push_back({{cursor, piece.range.end}, false});
        }
        pieces = std::move(next);
    }

    // Units that are empty after trimming dissolve into the surrounding
    // separator run.
    std::string pending = "";
    for (const Piece& piece : pieces) {
        std::string_view bytes(text.data() + piece.range.begin,
                               piece.range.end - piece.range.begin);
        if (piece.is_sep || all_space(text, piece.range.begin, piece.range.end)) {
            pending.append(bytes);
            continue;
        }
        if (ctx.units.empty())
            ctx.leading_sep = pending;
        else
            ctx.seps.back() = pending;
        pending.clear();
        ctx.units.emplace_back(bytes);
        ctx.seps.emplace_back();
    }
    if (!ctx.units.empty())
        ctx.seps.back() = pending;
    else
        ctx.leading_sep = pending;
    return ctx;
}

SpanPlan build_plan(long long L, std::vector<long long> lengths, const PlanStrategy& strategy,
                    std::uint64_t seed, const std::string& problem_id) {
    if (L < 0) throw InputError("build_plan: negative context length");
    std::sort(lengths.begin(), lengths.end());
    lengths.erase(std::unique(lengths.begin(), lengths.end()), lengths.end());

    std::vector<long long> ladder;
    for (long long c : lengths) {
        if (c < 0) throw InputError("build_plan: negative observation length");
        if (c > L) continue;  // drop silently; the full-context entry is c == L
        ladder.push_back(c);
    }

    if (strategy.kind == PlanStrategy::Kind::LengthSubset) {
        std::set<long long> keep(strategy.keep_lengths.begin(), strategy.keep_lengths.end());
        std::vector<long long> filtered;
        for (long long c : ladder) {
            bool ok = keep.empty()
                          ? (!strategy.min_len || c >= *strategy.min_len) &&
                                (!strategy.max_len || c <= *strategy.max_len)
                          : keep.count(c) > 0;
            if (ok) filtered.push_back(c);
        }
        if (filtered.empty() && !ladder.empty())
            throw InputError("LengthSubset removed every observation length");
        ladder = std::move(filtered);
    }

    SpanPlan plan;
    plan.problem_id = problem_id;
    plan.lengths = ladder;

    for (long long c : ladder) {
        if (c == 0) {
            plan.spans.push_back({0, 0});
            continue;
        }
        const long long last_start = L - c + 1;
        switch (strategy.kind) {
            case PlanStrategy::Kind::TakeEvery: {
                if (strategy.step < 1) throw InputError("TakeEvery: step must be >= 1");
                for (long long s = 1; s <= last_start; s += strategy.step)
                    plan.spans.push_back({s, c});
                break;
            }
            case PlanStrategy::Kind::TakeInvProp: {
                long long step = std::max<long long>(
                    1, static_cast<long long>(std::llround(strategy.base * static_cast<double>(c))));
                for (long long s = 1; s <= last_start; s += step) plan.spans.push_back({s, c});
                break;
            }
            case PlanStrategy::Kind::SampleRate: {
                if (!(strategy.rate > 0.0) || strategy.rate > 1.0)
                    throw InputError("SampleRate: rate must be in (0, 1]");
                for (long long s = 1; s <= last_start; ++s) {
                    Rng rng(seed, hash_combine(static_cast<std::uint64_t>(c),
                                               static_cast<std::uint64_t>(s)));
                    if (rng.next_double() < strategy.rate) plan.spans.push_back({s, c});
                }
                break;
            }
            case PlanStrategy::Kind::SampleInvProp: {
                const double keep = std::min(1.0, strategy.base / static_cast<double>(std::max<long long>(1, c)));
                for (long long s = 1; s <= last_start; ++s) {
                    Rng rng(seed, hash_combine(static_cast<std::uint64_t>(c),
                                               static_cast<std::uint64_t>(s)));
                    if (rng.next_double() < keep) plan.spans.push_back({s, c});
                }
                break;
            }
            case PlanStrategy::Kind::ExhaustiveAll:
            case PlanStrategy::Kind::LengthSubset: {
                for (long long s = 1; s <= last_start; ++s) plan.spans.push_back({s, c});
                break;
            }
        }
    }
    return plan;
}

std::string render_prompt(const std::string& instruction, const UnitizedContext& ctx,
                          const Span& span, const std::string& question, IdkStyle idk) {
    std::vector<std::string> parts;
    if (!instruction.empty()) parts.push_back(instruction);
    switch (idk) {
        case IdkStyle::Unanswerable:
            parts.push_back("If you cannot answer the question, you should answer \"Unanswerable\".");
            break;
        case IdkStyle::ChoiceE:
            parts.push_back(
                "If the question cannot be answered based on the information in the article, "
                "write \"E\" for \"unanswerable\".");
            break;
        case IdkStyle::None: break;
    }
    if (span.len > 0) {
        parts.push_back(ctx.join_range(static_cast<std::size_t>(span.start - 1),
                                       static_cast<std::size_t>(span.len)));
    }
    if (!question.empty()) parts.push_back(question);
    if (idk == IdkStyle::ChoiceE) parts.push_back("E. The question is unanswerable.");

    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += "\n\n";
        out += parts[i];
    }
    return out;
}

}  // namespace dolce::corpus
