#include "dolce/scoring.hpp"

#include "dolce/errors.hpp"

#include <algorithm>
#include <cctype>
#include <regex>

namespace dolce::scoring {

namespace {

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

bool contains_word_unanswerable(const std::string& output) {
    static const std::regex re(R"(\bunanswerable\b)", std::regex::icase);
    return std::regex_search(output, re);
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = (a[i - 1] == b[j - 1]) ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

std::size_t levenshtein(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

double f1_from_counts(double overlap, double pred_n, double ref_n) {
    if (pred_n == 0 && ref_n == 0) return 1.0;
    if (overlap == 0 || pred_n == 0 || ref_n == 0) return 0.0;
    const double p = overlap / pred_n;
    const double r = overlap / ref_n;
    return 2.0 * p * r / (p + r);
}

double score_one(const std::string& prediction, const std::string& reference, Metric metric) {
    switch (metric) {
        case Metric::Accuracy: {
            return normalize_tokens(prediction) == normalize_tokens(reference) ? 1.0 : 0.0;
        }
        case Metric::TokenF1: {
            auto p = normalize_tokens(prediction);
            auto r = normalize_tokens(reference);
            // multiset overlap
            std::vector<std::string> ps = p, rs = r;
            std::sort(ps.begin(), ps.end());
            std::sort(rs.begin(), rs.end());
            std::vector<std::string> common;
            std::set_intersection(ps.begin(), ps.end(), rs.begin(), rs.end(),
                                  std::back_inserter(common));
            return f1_from_counts(static_cast<double>(common.size()),
                                  static_cast<double>(p.size()), static_cast<double>(r.size()));
        }
        case Metric::RougeL: {
            auto p = normalize_tokens(prediction);
            auto r = normalize_tokens(reference);
            return f1_from_counts(static_cast<double>(lcs_length(p, r)),
                                  static_cast<double>(p.size()), static_cast<double>(r.size()));
        }
        case Metric::EditSim: {
            const std::string a = trim(prediction), b = trim(reference);
            const std::size_t denom = std::max(a.size(), b.size());
            if (denom == 0) return 1.0;
            return 1.0 - static_cast<double>(levenshtein(a, b)) / static_cast<double>(denom);
        }
    }
    return 0.0;
}

std::string letter_range(int n_choices) {
    std::string letters;
    for (int i = 0; i < n_choices; ++i) letters.push_back(static_cast<char>('A' + i));
    return letters;
}

}  // namespace

Metric metric_from_string(const std::string& name) {
    const std::string n = lower(trim(name));
    if (n == "accuracy" || n == "acc") return Metric::Accuracy;
    if (n == "token_f1" || n == "f1") return Metric::TokenF1;
    if (n == "rouge_l" || n == "rougel" || n == "rouge") return Metric::RougeL;
    if (n == "edit_sim" || n == "editsim") return Metric::EditSim;
    throw ConfigError("unknown metric: " + name);
}

std::string to_string(Metric m) {
    switch (m) {
        case Metric::Accuracy: return "accuracy";
        case Metric::TokenF1: return "token_f1";
        case Metric::RougeL: return "rouge_l";
        case Metric::EditSim: return "edit_sim";
    }
    return "?";
}

const char* to_string(CowOutcome o) {
    switch (o) {
        case CowOutcome::One: return "1";
        case CowOutcome::Zero: return "0";
        case CowOutcome::Idk: return "idk";
    }
    return "?";
}

std::vector<std::string> normalize_tokens(const std::string& text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char raw : text) {
        unsigned char c = static_cast<unsigned char>(raw);
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (c >= 0x80) {
            cur.push_back(raw);  // keep non-ASCII bytes intact
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

Extraction extract_answer(const std::string& output, const ExtractorSpec& spec) {
    if (contains_word_unanswerable(output)) return {true, ""};
    const std::string text = trim(output);

    switch (spec.kind) {
        case ExtractorSpec::Kind::Identity:
            return {false, output};
        case ExtractorSpec::Kind::FirstLine: {
            std::size_t pos = 0;
            while (pos < text.size()) {
                std::size_t eol = text.find('\n', pos);
                std::string line = trim(text.substr(pos, eol == std::string::npos ? eol : eol - pos));
                if (!line.empty()) return {false, line};
                if (eol == std::string::npos) break;
                pos = eol + 1;
            }
            return {true, ""};
        }
        case ExtractorSpec::Kind::FirstWord: {
            auto tokens = normalize_tokens(text);
            if (tokens.empty()) return {true, ""};
            return {false, tokens.front()};
        }
        case ExtractorSpec::Kind::ChoiceLetter: {
            const std::string letters = letter_range(spec.n_choices);
            const char idk_letter = static_cast<char>('A' + spec.n_choices);  // E for 4 choices
            // standalone letter, optionally wrapped: (C)  C.  C)  "C"
            static const std::regex re(R"((?:^|[^A-Za-z])([A-Za-z])(?:[^A-Za-z]|$))");
            auto begin = std::sregex_iterator(text.begin(), text.end(), re);
            for (auto it = begin, done = std::sregex_iterator(); it != done; ++it) {
                char letter = static_cast<char>(
                    std::toupper(static_cast<unsigned char>(it->str(1)[0])));
                if (letter == idk_letter) return {true, ""};
                if (letters.find(letter) != std::string::npos)
                    return {false, std::string(1, letter)};
            }
            return {true, ""};
        }
        case ExtractorSpec::Kind::Numeric: {
            static const std::regex re(R"([-+]?\d[\d,]*(?:\.\d+)?)");
            std::smatch m;
            if (!std::regex_search(text, m, re)) return {true, ""};
            std::string num = m.str(0);
            num.erase(std::remove(num.begin(), num.end(), ','), num.end());
            return {false, num};
        }
        case ExtractorSpec::Kind::TrecLabel: {
            static const std::vector<std::string> classes = {"abbreviation", "abbr", "entity",
                                                             "enty", "description", "desc",
                                                             "human", "hum", "location", "loc",
                                                             "numeric", "num"};
            auto tokens = normalize_tokens(text);
            for (const auto& t : tokens)
                for (const auto& c : classes)
                    if (t == c) return {false, t};
            if (tokens.empty()) return {true, ""};
            return {false, tokens.front()};
        }
        case ExtractorSpec::Kind::CodeBlock: {
            std::size_t open = text.find("```");
            if (open != std::string::npos) {
                std::size_t body = text.find('\n', open);
                if (body != std::string::npos) {
                    std::size_t close = text.find("```", body);
                    if (close != std::string::npos)
                        return {false, text.substr(body + 1, close - body - 1)};
                }
            }
            return {false, output};  // best effort: no fence, keep everything
        }
    }
    return {true, ""};
}

double score(const std::string& prediction, const std::vector<std::string>& references,
             Metric metric) {
    if (references.empty()) throw InputError("score: empty reference list");
    double best = 0.0;
    for (const auto& ref : references) best = std::max(best, score_one(prediction, ref, metric));
    return best;
}

CowOutcome to_cow_outcome(const ScoredOutcome& raw, double threshold) {
    if (threshold < 0.0 || threshold > 1.0)
        throw InputError("to_cow_outcome: threshold must be in [0,1]");
    if (raw.idk) return CowOutcome::Idk;
    return raw.value >= threshold ? CowOutcome::One : CowOutcome::Zero;
}

}  // namespace dolce::scoring
