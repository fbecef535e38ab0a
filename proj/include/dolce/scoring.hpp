#pragma once

#include <string>
#include <vector>

namespace dolce::scoring {

enum class Metric { Accuracy, TokenF1, RougeL, EditSim };

Metric metric_from_string(const std::string& name);
std::string to_string(Metric m);

struct ExtractorSpec {
    enum class Kind { FirstWord, FirstLine, ChoiceLetter, Numeric, TrecLabel, Identity, CodeBlock };
    Kind kind = Kind::Identity;
    int n_choices = 4;  // ChoiceLetter only
};

/// Either an answer string or the IDK marker. IDK detection runs before
/// extraction so refusal phrases never reach the metrics.
struct Extraction {
    bool idk = false;
    std::string answer;
};

Extraction extract_answer(const std::string& output, const ExtractorSpec& spec);

/// Max over references; throws InputError on empty reference list.
double score(const std::string& prediction, const std::vector<std::string>& references,
             Metric metric);

enum class CowOutcome { One, Zero, Idk };

const char* to_string(CowOutcome o);

struct ScoredOutcome {
    std::string problem_id;
    long long start = 0;
    long long c = 0;
    bool idk = false;
    double value = 0.0;  // in [0,1] when !idk
    Metric metric = Metric::Accuracy;
};

CowOutcome to_cow_outcome(const ScoredOutcome& raw, double threshold);

// Shared normalization used by TokenF1/RougeL/Accuracy: lowercase, strip
// punctuation, whitespace tokenize.
std::vector<std::string> normalize_tokens(const std::string& text);

}  // namespace dolce::scoring
