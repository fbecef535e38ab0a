#pragma once

#include "dolce/corpus.hpp"
#include "dolce/scoring.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace dolce::config {

enum class ScenarioChoice { Auto, Cow, Pig };

struct EmConfig {
    int t_cow = 10;
    int t_pig = 5;
};

struct DipConfig {
    int n_mc = 1000;
    std::uint64_t seed = 7;
};

struct ThresholdOverrides {
    std::optional<long long> lambda_p, k_p, lambda_q;
};

struct TaskConfig {
    std::string task_id;
    std::string unit_spec = "s";
    std::vector<long long> lengths;  // finite ladder entries (0 allowed)
    bool include_full = true;        // add the full-context observation
    scoring::Metric metric = scoring::Metric::Accuracy;
    scoring::ExtractorSpec extractor;
    corpus::IdkStyle idk_style = corpus::IdkStyle::Unanswerable;
    double binarize_threshold = 0.5;
    corpus::PlanStrategy strategy;
    EmConfig em;
    DipConfig dip;
    ScenarioChoice scenario = ScenarioChoice::Auto;
    ThresholdOverrides thresholds;
    std::uint64_t seed = 0;
    std::string instruction;  // optional default instruction text
};

struct ObserverConfig {
    enum class Kind { None, Replay, Http } kind = Kind::None;
    std::string path;      // Replay: response JSONL
    std::string url;       // Http
    std::string auth_env;  // Http: env var holding the bearer token
    int timeout_ms = 30000;
    int max_retries = 2;
    int max_in_flight = 4;
    long long failure_budget = -1;  // -1: unlimited
};

struct Config {
    std::vector<TaskConfig> tasks;
    ObserverConfig observer;
};

Config load_config(const std::string& path);
Config parse_config(const nlohmann::json& j);
TaskConfig parse_task(const nlohmann::json& j);

const TaskConfig& find_task(const Config& cfg, const std::string& task_id);

scoring::ExtractorSpec extractor_from_string(const std::string& name, int n_choices);

}  // namespace dolce::config
