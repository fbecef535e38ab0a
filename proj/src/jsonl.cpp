#include "dolce/jsonl.hpp"

#include "dolce/errors.hpp"

#include <fstream>
#include <sstream>

namespace dolce::io {

using nlohmann::json;

std::vector<json> read_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open: " + path);
    std::vector<json> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            rows.push_back(json::parse(line));
        } catch (const json::exception& e) {
            throw InputError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return rows;
}

void write_jsonl(const std::string& path, const std::vector<json>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw InputError("cannot write: " + path);
    for (const json& row : rows) out << row.dump() << "\n";
}

std::vector<ContextRow> read_contexts(const std::string& path) {
    std::vector<ContextRow> out;
    for (const json& j : read_jsonl(path)) {
        ContextRow row;
        row.problem_id = j.at("problem_id").get<std::string>();
        row.task_id = j.value("task_id", "");
        row.context = j.value("context", "");
        row.instruction = j.value("instruction", "");
        row.question = j.value("question", "");
        if (j.contains("answers")) row.answers = j.at("answers").get<std::vector<std::string>>();
        out.push_back(std::move(row));
    }
    return out;
}

json to_json(const corpus::UnitizedContext& ctx) {
    return json{{"problem_id", ctx.problem_id},
                {"spec", ctx.spec_id},
                {"units", ctx.units},
                {"lead", ctx.leading_sep},
                {"seps", ctx.seps},
                {"L", ctx.length()}};
}

corpus::UnitizedContext unitized_from_json(const json& j) {
    corpus::UnitizedContext ctx;
    ctx.problem_id = j.at("problem_id").get<std::string>();
    ctx.spec_id = j.at("spec").get<std::string>();
    ctx.units = j.at("units").get<std::vector<std::string>>();
    ctx.leading_sep = j.value("lead", "");
    if (j.contains("seps"))
        ctx.seps = j.at("seps").get<std::vector<std::string>>();
    else
        ctx.seps.assign(ctx.units.size(), "\n");
    if (ctx.seps.size() != ctx.units.size())
        throw InputError("unitized row: seps/units size mismatch for " + ctx.problem_id);
    return ctx;
}

json to_json(const corpus::SpanPlan& plan) {
    json spans = json::array();
    for (const corpus::Span& s : plan.spans) spans.push_back({{"start", s.start}, {"c", s.len}});
    return json{{"problem_id", plan.problem_id}, {"spans", spans}, {"lengths", plan.lengths}};
}

corpus::SpanPlan plan_from_json(const json& j) {
    corpus::SpanPlan plan;
    plan.problem_id = j.at("problem_id").get<std::string>();
    for (const json& s : j.at("spans"))
        plan.spans.push_back({s.at("start").get<long long>(), s.at("c").get<long long>()});
    if (j.contains("lengths")) plan.lengths = j.at("lengths").get<std::vector<long long>>();
    return plan;
}

json to_json(const scoring::ScoredOutcome& o) {
    json j{{"problem_id", o.problem_id},
           {"start", o.start},
           {"c", o.c},
           {"metric", scoring::to_string(o.metric)}};
    if (o.idk)
        j["score"] = "idk";
    else
        j["score"] = o.value;
    return j;
}

scoring::ScoredOutcome scored_from_json(const json& j) {
    scoring::ScoredOutcome o;
    o.problem_id = j.at("problem_id").get<std::string>();
    o.start = j.value("start", 0LL);
    o.c = j.at("c").get<long long>();
    o.metric = scoring::metric_from_string(j.value("metric", "accuracy"));
    const json& score = j.at("score");
    if (score.is_string()) {
        if (score.get<std::string>() != "idk")
            throw InputError("scored row: non-numeric score must be \"idk\"");
        o.idk = true;
    } else {
        o.value = score.get<double>();
        if (o.value < 0.0 || o.value > 1.0) throw InputError("scored row: score outside [0,1]");
    }
    return o;
}

json to_json(const OutputRow& row) {
    return json{{"problem_id", row.problem_id},
                {"start", row.start},
                {"c", row.c},
                {"output", row.output}};
}

OutputRow output_from_json(const json& j) {
    OutputRow row;
    row.problem_id = j.at("problem_id").get<std::string>();
    row.start = j.value("start", 0LL);
    row.c = j.at("c").get<long long>();
    row.output = j.at("output").get<std::string>();
    return row;
}

json to_json(const DipRow& row) {
    json j{{"problem_id", row.problem_id},
           {"dip", row.dip},
           {"label", scenario::to_string(row.label)}};
    if (row.has_p)
        j["p"] = row.p;
    else
        j["p"] = nullptr;
    return j;
}

DipRow dip_from_json(const json& j) {
    DipRow row;
    row.problem_id = j.at("problem_id").get<std::string>();
    row.dip = j.value("dip", 0.0);
    if (j.contains("p") && !j.at("p").is_null()) {
        row.p = j.at("p").get<double>();
        row.has_p = true;
    } else {
        row.has_p = false;
    }
    const std::string label = j.at("label").get<std::string>();
    row.label = label == "pig" ? scenario::Label::PIG : scenario::Label::COW;
    return row;
}

json fit_to_json(const em::ProblemFit& fit, const std::string& scenario) {
    json j{{"problem_id", fit.problem_id},
           {"lambda", fit.lambda_star},
           {"k", fit.k_star},
           {"prior_oracle", fit.prior_oracle},
           {"loglik", fit.loglik},
           {"scenario", scenario}};
    if (!fit.anchored_s.empty()) {
        json anchors = json::object();
        for (const auto& [c, s] : fit.anchored_s) anchors[std::to_string(c)] = s;
        j["anchored_s"] = anchors;
    }
    return j;
}

FitRow fit_from_json(const json& j) {
    FitRow row;
    row.fit.problem_id = j.at("problem_id").get<std::string>();
    row.fit.lambda_star = j.at("lambda").get<long long>();
    row.fit.k_star = j.at("k").get<long long>();
    row.fit.prior_oracle = j.value("prior_oracle", 0.5);
    row.fit.loglik = j.value("loglik", 0.0);
    row.scenario = j.value("scenario", "cow");
    if (j.contains("anchored_s"))
        for (const auto& [key, value] : j.at("anchored_s").items())
            row.fit.anchored_s[std::stoll(key)] = value.get<double>();
    return row;
}

json noise_to_json(const em::NoiseParams& noise, const std::string& scenario) {
    return json{{"p1", noise.p1},
                {"p0", noise.p0},
                {"p_idk", noise.p_idk},
                {"scenario", scenario}};
}

em::NoiseParams noise_from_json(const json& j) {
    return {j.at("p1").get<double>(), j.at("p0").get<double>(), j.at("p_idk").get<double>()};
}

json to_json(const CategoryRow& row) {
    return json{{"problem_id", row.problem_id},
                {"lambda", row.lambda},
                {"k", row.k},
                {"category", taxonomy::to_string(row.category)}};
}

CategoryRow category_from_json(const json& j) {
    CategoryRow row;
    row.problem_id = j.at("problem_id").get<std::string>();
    row.lambda = j.at("lambda").get<long long>();
    row.k = j.at("k").get<long long>();
    row.category = taxonomy::category_from_string(j.at("category").get<std::string>());
    return row;
}

std::uint64_t content_hash(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t file_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return 0;
    std::ostringstream ss;
    ss << in.rdbuf();
    return content_hash(ss.str());
}

}  // namespace dolce::io
