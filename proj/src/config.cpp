#include "dolce/config.hpp"

#include "dolce/errors.hpp"

#include <fstream>

namespace dolce::config {

namespace {

using nlohmann::json;

corpus::IdkStyle idk_from_string(const std::string& name) {
    if (name == "unanswerable") return corpus::IdkStyle::Unanswerable;
    if (name == "choice_e") return corpus::IdkStyle::ChoiceE;
    if (name == "none") return corpus::IdkStyle::None;
    throw ConfigError("unknown idk_style: " + name);
}

corpus::PlanStrategy strategy_from_json(const json& j) {
    corpus::PlanStrategy st;
    const std::string kind = j.value("kind", "exhaustive");
    if (kind == "exhaustive") {
        st.kind = corpus::PlanStrategy::Kind::ExhaustiveAll;
    } else if (kind == "take_every") {
        st.kind = corpus::PlanStrategy::Kind::TakeEvery;
        st.step = j.value("step", 1);
    } else if (kind == "sample_rate") {
        st.kind = corpus::PlanStrategy::Kind::SampleRate;
        st.rate = j.value("rate", 1.0);
    } else if (kind == "take_inv_prop") {
        st.kind = corpus::PlanStrategy::Kind::TakeInvProp;
        st.base = j.value("base", 1.0);
    } else if (kind == "sample_inv_prop") {
        st.kind = corpus::PlanStrategy::Kind::SampleInvProp;
        st.base = j.value("base", 1.0);
    } else if (kind == "length_subset") {
        st.kind = corpus::PlanStrategy::Kind::LengthSubset;
        if (j.contains("keep_lengths"))
            st.keep_lengths = j.at("keep_lengths").get<std::vector<long long>>();
        if (j.contains("min_len")) st.min_len = j.at("min_len").get<long long>();
        if (j.contains("max_len")) st.max_len = j.at("max_len").get<long long>();
    } else {
        throw ConfigError("unknown strategy kind: " + kind);
    }
    return st;
}

}  // namespace

scoring::ExtractorSpec extractor_from_string(const std::string& name, int n_choices) {
    using Kind = scoring::ExtractorSpec::Kind;
    scoring::ExtractorSpec spec;
    spec.n_choices = n_choices;
    if (name == "identity" || name == "none")
        spec.kind = Kind::Identity;
    else if (name == "first_word")
        spec.kind = Kind::FirstWord;
    else if (name == "first_line")
        spec.kind = Kind::FirstLine;
    else if (name == "choice_letter")
        spec.kind = Kind::ChoiceLetter;
    else if (name == "numeric")
        spec.kind = Kind::Numeric;
    else if (name == "trec")
        spec.kind = Kind::TrecLabel;
    else if (name == "code_block")
        spec.kind = Kind::CodeBlock;
    else
        throw ConfigError("unknown extractor: " + name);
    return spec;
}

TaskConfig parse_task(const nlohmann::json& j) {
    TaskConfig t;
    t.task_id = j.at("task_id").get<std::string>();
    t.unit_spec = j.value("unit_spec", "s");
    t.lengths = j.value("lengths", std::vector<long long>{});
    std::sort(t.lengths.begin(), t.lengths.end());
    t.include_full = j.value("include_full", true);
    t.metric = scoring::metric_from_string(j.value("metric", "accuracy"));
    t.extractor =
        extractor_from_string(j.value("extractor", "identity"), j.value("n_choices", 4));
    t.idk_style = idk_from_string(j.value("idk_style", "unanswerable"));
    t.binarize_threshold = j.value("binarize_threshold", 0.5);
    if (t.binarize_threshold < 0.0 || t.binarize_threshold > 1.0)
        throw ConfigError("binarize_threshold outside [0,1]");
    if (j.contains("strategy")) t.strategy = strategy_from_json(j.at("strategy"));
    if (j.contains("em")) {
        t.em.t_cow = j.at("em").value("t_cow", 10);
        t.em.t_pig = j.at("em").value("t_pig", 5);
    }
    if (j.contains("dip")) {
        t.dip.n_mc = j.at("dip").value("n_mc", 1000);
        t.dip.seed = j.at("dip").value("seed", 7);
    }
    const std::string scenario = j.value("scenario", "auto");
    t.scenario = scenario == "cow"   ? ScenarioChoice::Cow
                 : scenario == "pig" ? ScenarioChoice::Pig
                 : scenario == "auto"
                     ? ScenarioChoice::Auto
                     : throw ConfigError("unknown scenario override: " + scenario);
    if (j.contains("thresholds")) {
        const json& thr = j.at("thresholds");
        if (thr.contains("lambda_p")) t.thresholds.lambda_p = thr.at("lambda_p").get<long long>();
        if (thr.contains("k_p")) t.thresholds.k_p = thr.at("k_p").get<long long>();
        if (thr.contains("lambda_q")) t.thresholds.lambda_q = thr.at("lambda_q").get<long long>();
    }
    t.seed = j.value("seed", 0ULL);
    t.instruction = j.value("instruction", "");
    return t;
}

Config parse_config(const nlohmann::json& j) {
    Config cfg;
    if (!j.contains("tasks") || !j.at("tasks").is_array() || j.at("tasks").empty())
        throw ConfigError("config has no tasks");
    for (const auto& tj : j.at("tasks")) cfg.tasks.push_back(parse_task(tj));

    if (j.contains("observer")) {
        const json& o = j.at("observer");
        const std::string kind = o.value("kind", "none");
        if (kind == "replay") {
            cfg.observer.kind = ObserverConfig::Kind::Replay;
            cfg.observer.path = o.at("path").get<std::string>();
        } else if (kind == "http") {
            cfg.observer.kind = ObserverConfig::Kind::Http;
            cfg.observer.url = o.at("url").get<std::string>();
            cfg.observer.auth_env = o.value("auth_env", "");
            cfg.observer.timeout_ms = o.value("timeout_ms", 30000);
            cfg.observer.max_retries = o.value("max_retries", 2);
            cfg.observer.max_in_flight = o.value("max_in_flight", 4);
            cfg.observer.failure_budget = o.value("failure_budget", -1LL);
        } else if (kind != "none") {
            throw ConfigError("unknown observer kind: " + kind);
        }
    }
    return cfg;
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    return parse_config(j);
}

const TaskConfig& find_task(const Config& cfg, const std::string& task_id) {
    for (const auto& t : cfg.tasks)
        if (t.task_id == task_id) return t;
    throw InputError("task not found in config: " + task_id);
}

}  // namespace dolce::config
