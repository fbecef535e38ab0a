#pragma once

#include "dolce/corpus.hpp"
#include "dolce/em_cow.hpp"
#include "dolce/em_pig.hpp"
#include "dolce/scenario.hpp"
#include "dolce/scoring.hpp"
#include "dolce/taxonomy.hpp"

#include <json.hpp>

#include <functional>
#include <string>
#include <vector>

namespace dolce::io {

// Line-delimited JSON is the inter-stage format. Readers tolerate blank
// lines; writers emit one compact object per line with sorted keys, so
// reruns are byte-identical.

struct ContextRow {
    std::string problem_id;
    std::string task_id;
    std::string context;
    std::string instruction;
    std::string question;
    std::vector<std::string> answers;
};

struct OutputRow {
    std::string problem_id;
    long long start = 0;
    long long c = 0;
    std::string output;
};

struct DipRow {
    std::string problem_id;
    double dip = 0.0;
    double p = 1.0;
    bool has_p = true;  // accuracy bypass rows carry no p-value
    scenario::Label label = scenario::Label::COW;
};

struct FitRow {
    em::ProblemFit fit;
    std::string scenario;  // "cow" | "pig"
};

struct CategoryRow {
    std::string problem_id;
    long long lambda = 0;
    long long k = 0;
    taxonomy::FocusCategory category = taxonomy::FocusCategory::I;
};

std::vector<nlohmann::json> read_jsonl(const std::string& path);
void write_jsonl(const std::string& path, const std::vector<nlohmann::json>& rows);

std::vector<ContextRow> read_contexts(const std::string& path);

nlohmann::json to_json(const corpus::UnitizedContext& ctx);
corpus::UnitizedContext unitized_from_json(const nlohmann::json& j);

nlohmann::json to_json(const corpus::SpanPlan& plan);
corpus::SpanPlan plan_from_json(const nlohmann::json& j);

nlohmann::json to_json(const scoring::ScoredOutcome& outcome);
scoring::ScoredOutcome scored_from_json(const nlohmann::json& j);

nlohmann::json to_json(const OutputRow& row);
OutputRow output_from_json(const nlohmann::json& j);

nlohmann::json to_json(const DipRow& row);
DipRow dip_from_json(const nlohmann::json& j);

nlohmann::json fit_to_json(const em::ProblemFit& fit, const std::string& scenario);
FitRow fit_from_json(const nlohmann::json& j);

nlohmann::json noise_to_json(const em::NoiseParams& noise, const std::string& scenario);
em::NoiseParams noise_from_json(const nlohmann::json& j);

nlohmann::json to_json(const CategoryRow& row);
CategoryRow category_from_json(const nlohmann::json& j);

/// Stable 64-bit content hash (FNV-1a) used for pipeline idempotence checks.
std::uint64_t content_hash(const std::string& bytes);
std::uint64_t file_hash(const std::string& path);

}  // namespace dolce::io
