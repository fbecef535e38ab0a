#include "dolce/pipeline.hpp"

#include "dolce/errors.hpp"
#include "dolce/observer.hpp"
#include "dolce/rng.hpp"
#include "dolce/scenario.hpp"
#include "dolce/taxonomy.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace dolce::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Manifest: stage name -> {"in": input hash, "out": {file: hash}}. A stage
// reruns only when its input hash changed or an output is missing/stale.
class Manifest {
public:
    Manifest(const std::string& dir, bool force) : path_(dir + "/manifest.json"), force_(force) {
        std::ifstream in(path_);
        if (in) {
            try {
                in >> state_;
            } catch (const json::exception&) {
                state_ = json::object();
            }
        }
        if (!state_.is_object()) state_ = json::object();
    }

    bool up_to_date(const std::string& stage, std::uint64_t input_hash,
                    const std::vector<std::string>& outputs) const {
        if (force_) return false;
        if (!state_.contains(stage)) return false;
        const json& s = state_.at(stage);
        if (s.value("in", "") != std::to_string(input_hash)) return false;
        if (!s.contains("out")) return false;
        for (const std::string& f : outputs) {
            if (!s.at("out").contains(f)) return false;
            if (s.at("out").at(f).get<std::string>() != std::to_string(io::file_hash(f)))
                return false;
        }
        return true;
    }

    void record(const std::string& stage, std::uint64_t input_hash,
                const std::vector<std::string>& outputs) {
        json out = json::object();
        for (const std::string& f : outputs) out[f] = std::to_string(io::file_hash(f));
        state_[stage] = json{{"in", std::to_string(input_hash)}, {"out", out}};
        std::ofstream file(path_, std::ios::trunc);
        file << state_.dump(2) << "\n";
    }

private:
    std::string path_;
    bool force_;
    json state_;
};

std::string fmt_percent(double p) {
    std::ostringstream ss;
    ss << (p * 100.0) << "%";
    return ss.str();
}

struct TaskTable {
    std::string task_id;
    long long n = 0;
    std::map<std::string, long long> counts;  // category name -> count
    double holistic_share() const {
        long long hi = 0;
        for (const char* cat : {"III", "IV", "V"})
            if (counts.count(cat)) hi += counts.at(cat);
        return n ? static_cast<double>(hi) / static_cast<double>(n) : 0.0;
    }
};

}  // namespace

namespace {

// Changes to the task block must invalidate downstream stages.
std::uint64_t task_fingerprint(const config::TaskConfig& task) {
    json j{{"task_id", task.task_id},
           {"unit_spec", task.unit_spec},
           {"lengths", task.lengths},
           {"include_full", task.include_full},
           {"metric", scoring::to_string(task.metric)},
           {"extractor", static_cast<int>(task.extractor.kind)},
           {"n_choices", task.extractor.n_choices},
           {"idk", static_cast<int>(task.idk_style)},
           {"threshold", task.binarize_threshold},
           {"strategy", static_cast<int>(task.strategy.kind)},
           {"step", task.strategy.step},
           {"rate", task.strategy.rate},
           {"base", task.strategy.base},
           {"t_cow", task.em.t_cow},
           {"t_pig", task.em.t_pig},
           {"n_mc", task.dip.n_mc},
           {"dip_seed", task.dip.seed},
           {"scenario", static_cast<int>(task.scenario)},
           {"seed", task.seed}};
    if (task.thresholds.lambda_p) j["lambda_p"] = *task.thresholds.lambda_p;
    if (task.thresholds.k_p) j["k_p"] = *task.thresholds.k_p;
    if (task.thresholds.lambda_q) j["lambda_q"] = *task.thresholds.lambda_q;
    return io::content_hash(j.dump());
}

}  // namespace

std::vector<long long> ladder_for(const config::TaskConfig& task, long long L) {
    std::vector<long long> ladder;
    for (long long c : task.lengths)
        if (c <= L) ladder.push_back(c);
    if (task.include_full &&
        std::find(ladder.begin(), ladder.end(), L) == ladder.end())
        ladder.push_back(L);
    std::sort(ladder.begin(), ladder.end());
    return ladder;
}

std::uint64_t problem_seed(const config::TaskConfig& task, const std::string& problem_id) {
    return hash_combine(task.seed, io::content_hash(problem_id));
}

ScenarioSplit route_scenarios(const config::TaskConfig& task,
                              const std::vector<scoring::ScoredOutcome>& outcomes,
                              bool apply_rule) {
    // group by problem, preserving first appearance
    std::vector<std::string> order;
    std::map<std::string, std::vector<const scoring::ScoredOutcome*>> groups;
    for (const auto& o : outcomes) {
        if (!groups.count(o.problem_id)) order.push_back(o.problem_id);
        groups[o.problem_id].push_back(&o);
    }

    ScenarioSplit split;
    std::vector<scenario::Label> labels;
    for (const std::string& id : order) {
        io::DipRow row;
        row.problem_id = id;
        if (task.metric == scoring::Metric::Accuracy ||
            task.scenario == config::ScenarioChoice::Cow) {
            row.label = scenario::Label::COW;
            row.has_p = false;
        } else if (task.scenario == config::ScenarioChoice::Pig) {
            row.label = scenario::Label::PIG;
            row.has_p = false;
        } else {
            std::vector<double> scores;
            for (const auto* o : groups[id])
                if (!o->idk) scores.push_back(o->value);
            const scenario::ClassifyResult res =
                scenario::classify(scores, task.dip.n_mc, task.dip.seed);
            row.dip = res.dip;
            row.p = res.p;
            row.label = res.label;
        }
        labels.push_back(row.label);
        split.rows.push_back(row);
    }

    if (apply_rule && task.scenario == config::ScenarioChoice::Auto &&
        task.metric != scoring::Metric::Accuracy) {
        labels = scenario::apply_task_rule(labels);
        for (std::size_t i = 0; i < labels.size(); ++i) split.rows[i].label = labels[i];
    }

    for (std::size_t i = 0; i < order.size(); ++i) {
        for (const auto* o : groups[order[i]]) {
            if (labels[i] == scenario::Label::COW)
                split.cow.push_back(*o);
            else
                split.pig.push_back(*o);
        }
    }
    return split;
}

void emit_report(const std::map<std::string, std::vector<io::CategoryRow>>& by_task,
                 const std::string& out_dir, bool svg) {
    if (by_task.empty()) throw InputError("emit_report: no categories");
    std::vector<TaskTable> tables;
    for (const auto& [task_id, rows] : by_task) {
        TaskTable t;
        t.task_id = task_id;
        t.n = static_cast<long long>(rows.size());
        for (const auto& row : rows) ++t.counts[taxonomy::to_string(row.category)];
        tables.push_back(std::move(t));
    }
    std::sort(tables.begin(), tables.end(), [](const TaskTable& a, const TaskTable& b) {
        if (a.holistic_share() != b.holistic_share())
            return a.holistic_share() > b.holistic_share();
        return a.task_id < b.task_id;
    });

    {
        std::ofstream out(out_dir + "/report_stacked.csv", std::ios::trunc);
        out << "task_id,category,count,percent\n";
        for (const TaskTable& t : tables)
            for (const char* cat : {"I", "II", "III", "IV", "V"}) {
                const long long c = t.counts.count(cat) ? t.counts.at(cat) : 0;
                if (c == 0) continue;
                out << t.task_id << "," << cat << "," << c << ","
                    << fmt_percent(static_cast<double>(c) / static_cast<double>(t.n)) << "\n";
            }
    }

    {
        std::ofstream out(out_dir + "/report_heatmap.csv", std::ios::trunc);
        out << "task_id,lambda,k,count\n";
        for (const auto& [task_id, rows] : by_task) {
            std::map<std::pair<long long, long long>, long long> grid;
            for (const auto& row : rows) ++grid[{row.lambda, row.k}];
            for (const auto& [cell, count] : grid)
                out << task_id << "," << cell.first << "," << cell.second << "," << count
                    << "\n";
        }
    }

    if (!svg) return;
    {
        static const std::map<std::string, std::string> palette = {
            {"I", "#bdbdbd"}, {"II", "#74add1"}, {"III", "#4575b4"},
            {"IV", "#f46d43"}, {"V", "#d73027"}};
        const int bar_h = 22, gap = 6, width = 640, label_w = 180;
        const int height = static_cast<int>(tables.size()) * (bar_h + gap) + gap;
        std::ostringstream ss;
        ss << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width + label_w
           << "\" height=\"" << height << "\">\n";
        int y = gap;
        for (const TaskTable& t : tables) {
            ss << "<text x=\"4\" y=\"" << y + bar_h - 6 << "\" font-size=\"12\">" << t.task_id
               << "</text>\n";
            double x = label_w;
            for (const char* cat : {"I", "II", "III", "IV", "V"}) {
                const long long c = t.counts.count(cat) ? t.counts.at(cat) : 0;
                if (c == 0) continue;
                const double w =
                    static_cast<double>(width) * static_cast<double>(c) / static_cast<double>(t.n);
                ss << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << w << "\" height=\""
                   << bar_h << "\" fill=\"" << palette.at(cat) << "\"/>\n";
                x += w;
            }
            y += bar_h + gap;
        }
        ss << "</svg>\n";
        std::ofstream out(out_dir + "/report_stacked.svg", std::ios::trunc);
        out << ss.str();
    }
}

void run_task(const config::Config& cfg, const config::TaskConfig& task, const RunOptions& opt) {
    fs::create_directories(opt.out_dir);
    Manifest manifest(opt.out_dir, opt.force);

    const std::string unitized_path = opt.out_dir + "/unitized.jsonl";
    const std::string plan_path = opt.out_dir + "/plan.jsonl";
    const std::string outputs_path =
        opt.outputs_path.empty() ? opt.out_dir + "/outputs.jsonl" : opt.outputs_path;
    const std::string scored_path =
        opt.scored_path.empty() ? opt.out_dir + "/scored.jsonl" : opt.scored_path;
    const std::string dip_path = opt.out_dir + "/dip.jsonl";
    const std::string fits_cow_path = opt.out_dir + "/fits_cow.jsonl";
    const std::string fits_pig_path = opt.out_dir + "/fits_pig.jsonl";
    const std::string noise_cow_path = opt.out_dir + "/noise_cow.json";
    const std::string noise_pig_path = opt.out_dir + "/noise_pig.json";
    const std::string categories_path = opt.out_dir + "/categories.jsonl";

    const bool have_scored_input = !opt.scored_path.empty();
    const std::uint64_t cfg_hash = task_fingerprint(task);
    std::map<std::string, long long> context_lengths;

    if (!have_scored_input) {
        if (opt.contexts_path.empty())
            throw InputError("run: need either --contexts or --scored input");
        auto contexts = io::read_contexts(opt.contexts_path);
        std::erase_if(contexts, [&](const io::ContextRow& row) {
            return !row.task_id.empty() && row.task_id != task.task_id;
        });
        if (contexts.empty()) throw InputError("run: no contexts for task " + task.task_id);

        // split
        {
            const std::uint64_t in_hash =
                hash_combine(io::file_hash(opt.contexts_path), cfg_hash);
            if (!manifest.up_to_date("split", in_hash, {unitized_path})) {
                std::vector<json> rows;
                for (const auto& ctx_row : contexts)
                    rows.push_back(io::to_json(
                        corpus::split_units(ctx_row.context, task.unit_spec, ctx_row.problem_id)));
                io::write_jsonl(unitized_path, rows);
                manifest.record("split", in_hash, {unitized_path});
            }
        }

        std::vector<corpus::UnitizedContext> unitized;
        for (const auto& j : io::read_jsonl(unitized_path))
            unitized.push_back(io::unitized_from_json(j));
        for (const auto& u : unitized) context_lengths[u.problem_id] = u.length();

        // plan
        {
            const std::uint64_t in_hash = hash_combine(io::file_hash(unitized_path), cfg_hash);
            if (!manifest.up_to_date("plan", in_hash, {plan_path})) {
                std::vector<json> rows;
                for (const auto& u : unitized) {
                    auto plan = corpus::build_plan(u.length(), ladder_for(task, u.length()),
                                                   task.strategy,
                                                   problem_seed(task, u.problem_id),
                                                   u.problem_id);
                    rows.push_back(io::to_json(plan));
                }
                io::write_jsonl(plan_path, rows);
                manifest.record("plan", in_hash, {plan_path});
            }
        }

        std::vector<corpus::SpanPlan> plans;
        for (const auto& j : io::read_jsonl(plan_path)) plans.push_back(io::plan_from_json(j));

        // observe (optional)
        if (opt.outputs_path.empty()) {
            if (cfg.observer.kind == config::ObserverConfig::Kind::None)
                throw InputError("run: no observer configured and no --outputs provided");
            const std::uint64_t in_hash = hash_combine(io::file_hash(plan_path), cfg_hash);
            if (!manifest.up_to_date("observe", in_hash, {outputs_path})) {
                auto obs = observer::make_observer(cfg.observer);
                std::vector<json> rows;
                long long failures = 0;
                for (std::size_t i = 0; i < plans.size(); ++i) {
                    const auto& ctx_row = contexts[i];
                    const std::string instruction =
                        ctx_row.instruction.empty() ? task.instruction : ctx_row.instruction;
                    auto result = observer::observe_all(
                        unitized[i], plans[i], instruction, ctx_row.question, task.idk_style,
                        *obs, cfg.observer.max_in_flight, -1);
                    failures += result.failures;
                    for (const auto& out_row : result.outputs)
                        rows.push_back(io::to_json(out_row));
                }
                if (cfg.observer.failure_budget >= 0 && failures > cfg.observer.failure_budget)
                    throw ObserverError("observer failure budget exceeded (" +
                                        std::to_string(failures) + " failures)");
                io::write_jsonl(outputs_path, rows);
                manifest.record("observe", in_hash, {outputs_path});
            }
        }

        // score: extract answers, score against references; spans without a
        // model output become IDK records (degraded-data policy).
        {
            const std::uint64_t in_hash = hash_combine(
                hash_combine(io::file_hash(outputs_path), io::file_hash(plan_path)), cfg_hash);
            if (!manifest.up_to_date("score", in_hash, {scored_path})) {
                std::map<std::string, const io::ContextRow*> ctx_by_id;
                for (const auto& c : contexts) ctx_by_id[c.problem_id] = &c;
                std::map<std::tuple<std::string, long long, long long>, std::string> outputs;
                for (const auto& j : io::read_jsonl(outputs_path)) {
                    auto row = io::output_from_json(j);
                    outputs[{row.problem_id, row.start, row.c}] = row.output;
                }
                std::vector<json> rows;
                for (const auto& plan : plans) {
                    const io::ContextRow* ctx_row = ctx_by_id.at(plan.problem_id);
                    for (const auto& span : plan.spans) {
                        scoring::ScoredOutcome o;
                        o.problem_id = plan.problem_id;
                        o.start = span.start;
                        o.c = span.len;
                        o.metric = task.metric;
                        auto it = outputs.find({plan.problem_id, span.start, span.len});
                        if (it == outputs.end()) {
                            o.idk = true;
                        } else {
                            const auto ex = scoring::extract_answer(it->second, task.extractor);
                            if (ex.idk || ctx_row->answers.empty()) {
                                o.idk = true;
                            } else {
                                o.value = scoring::score(ex.answer, ctx_row->answers, task.metric);
                            }
                        }
                        rows.push_back(io::to_json(o));
                    }
                }
                io::write_jsonl(scored_path, rows);
                manifest.record("score", in_hash, {scored_path});
            }
        }
    }

    // load scored outcomes
    std::vector<scoring::ScoredOutcome> outcomes;
    for (const auto& j : io::read_jsonl(scored_path)) outcomes.push_back(io::scored_from_json(j));
    if (outcomes.empty()) throw InputError("run: no scored outcomes for task " + task.task_id);

    // context lengths when starting from pre-scored data
    if (context_lengths.empty()) {
        if (!opt.lengths_path.empty()) {
            for (const auto& j : io::read_jsonl(opt.lengths_path))
                context_lengths[j.at("problem_id").get<std::string>()] =
                    j.at("L").get<long long>();
        } else {
            for (const auto& o : outcomes) {
                auto& L = context_lengths[o.problem_id];
                L = std::max(L, o.c);
            }
        }
    }

    // diptest
    {
        const std::uint64_t in_hash = hash_combine(io::file_hash(scored_path), cfg_hash);
        if (!manifest.up_to_date("diptest", in_hash, {dip_path})) {
            auto split = route_scenarios(task, outcomes);
            std::vector<json> rows;
            for (const auto& row : split.rows) rows.push_back(io::to_json(row));
            io::write_jsonl(dip_path, rows);
            manifest.record("diptest", in_hash, {dip_path});
        }
    }

    // fit
    {
        const std::uint64_t in_hash = hash_combine(
            hash_combine(io::file_hash(scored_path), io::file_hash(dip_path)), cfg_hash);
        const std::vector<std::string> outs = {fits_cow_path, fits_pig_path, noise_cow_path,
                                               noise_pig_path};
        if (!manifest.up_to_date("fit", in_hash, outs)) {
            // partition by the persisted routing decisions
            std::map<std::string, scenario::Label> label_of;
            for (const auto& j : io::read_jsonl(dip_path)) {
                const auto row = io::dip_from_json(j);
                label_of[row.problem_id] = row.label;
            }
            ScenarioSplit split;
            for (const auto& o : outcomes) {
                auto it = label_of.find(o.problem_id);
                if (it == label_of.end())
                    throw InputError("fit: problem missing from dip routing: " + o.problem_id);
                (it->second == scenario::Label::COW ? split.cow : split.pig).push_back(o);
            }

            std::map<std::string, em::CandidateGrid> grids;
            for (const auto& [id, L] : context_lengths)
                grids[id] = em::build_grid(ladder_for(task, L), L);

            std::vector<json> cow_rows, pig_rows;
            json cow_noise = nullptr, pig_noise = nullptr;
            if (!split.cow.empty()) {
                std::vector<em::CowRecord> records;
                for (const auto& o : split.cow)
                    records.push_back({o.problem_id, o.c,
                                       scoring::to_cow_outcome(o, task.binarize_threshold)});
                auto result = em::fit_cow(records, grids, context_lengths, task.em.t_cow);
                for (const auto& fit : result.fits)
                    cow_rows.push_back(io::fit_to_json(fit, "cow"));
                cow_noise = io::noise_to_json(result.noise, "cow");
            }
            if (!split.pig.empty()) {
                std::vector<em::PigRecord> records;
                for (const auto& o : split.pig)
                    records.push_back({o.problem_id, o.c, o.idk, o.value});
                auto result = em::fit_pig(records, grids, context_lengths, task.em.t_pig);
                for (const auto& fit : result.fits)
                    pig_rows.push_back(io::fit_to_json(fit, "pig"));
                pig_noise = io::noise_to_json(result.noise, "pig");
            }
            io::write_jsonl(fits_cow_path, cow_rows);
            io::write_jsonl(fits_pig_path, pig_rows);
            {
                std::ofstream out(noise_cow_path, std::ios::trunc);
                out << cow_noise.dump() << "\n";
            }
            {
                std::ofstream out(noise_pig_path, std::ios::trunc);
                out << pig_noise.dump() << "\n";
            }
            manifest.record("fit", in_hash, outs);
        }
    }

    // assign
    {
        const std::uint64_t in_hash = hash_combine(
            hash_combine(io::file_hash(fits_cow_path), io::file_hash(fits_pig_path)), cfg_hash);
        const std::vector<std::string> outs = {categories_path, opt.out_dir + "/histogram.csv"};
        if (!manifest.up_to_date("assign", in_hash, outs)) {
            // thresholds from the task ladder (longest context), overridable
            long long max_L = 0;
            for (const auto& [id, L] : context_lengths) max_L = std::max(max_L, L);
            taxonomy::Thresholds thr =
                taxonomy::thresholds_from_lengths(ladder_for(task, max_L), max_L);
            if (task.thresholds.lambda_p) thr.lambda_p = *task.thresholds.lambda_p;
            if (task.thresholds.k_p) thr.k_p = *task.thresholds.k_p;
            if (task.thresholds.lambda_q) thr.lambda_q = *task.thresholds.lambda_q;

            std::vector<json> rows;
            std::map<std::string, long long> hist;
            for (const std::string& path : {fits_cow_path, fits_pig_path}) {
                for (const auto& j : io::read_jsonl(path)) {
                    auto fit_row = io::fit_from_json(j);
                    io::CategoryRow row;
                    row.problem_id = fit_row.fit.problem_id;
                    row.lambda = fit_row.fit.lambda_star;
                    row.k = fit_row.fit.k_star;
                    row.category = taxonomy::assign(row.lambda, row.k, thr,
                                                    context_lengths.at(row.problem_id));
                    ++hist[taxonomy::to_string(row.category)];
                    rows.push_back(io::to_json(row));
                }
            }
            io::write_jsonl(categories_path, rows);
            {
                std::ofstream out(opt.out_dir + "/histogram.csv", std::ios::trunc);
                out << "task_id,category,count\n";
                for (const auto& [cat, count] : hist)
                    out << task.task_id << "," << cat << "," << count << "\n";
            }
            manifest.record("assign", in_hash, outs);
        }
    }

    // report
    {
        const std::uint64_t in_hash = hash_combine(io::file_hash(categories_path), cfg_hash);
        std::vector<std::string> outs = {opt.out_dir + "/report_stacked.csv",
                                         opt.out_dir + "/report_heatmap.csv"};
        if (opt.emit_svg) outs.push_back(opt.out_dir + "/report_stacked.svg");
        if (!manifest.up_to_date("report", in_hash, outs)) {
            std::map<std::string, std::vector<io::CategoryRow>> by_task;
            for (const auto& j : io::read_jsonl(categories_path))
                by_task[task.task_id].push_back(io::category_from_json(j));
            emit_report(by_task, opt.out_dir, opt.emit_svg);
            manifest.record("report", in_hash, outs);
        }
    }
}

}  // namespace dolce::pipeline
