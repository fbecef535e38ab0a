#include "dolce/analysis.hpp"
#include "dolce/config.hpp"
#include "dolce/corpus.hpp"
#include "dolce/cover.hpp"
#include "dolce/em_cow.hpp"
#include "dolce/em_pig.hpp"
#include "dolce/errors.hpp"
#include "dolce/jsonl.hpp"
#include "dolce/pipeline.hpp"
#include "dolce/scenario.hpp"
#include "dolce/synth.hpp"
#include "dolce/taxonomy.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

using namespace dolce;
using nlohmann::json;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string task_id;
};

config::TaskConfig resolve_task(const CommonArgs& args) {
    config::Config cfg = config::load_config(args.config_path);
    if (args.task_id.empty()) {
        if (cfg.tasks.size() != 1)
            throw InputError("config has multiple tasks; pass --task");
        return cfg.tasks.front();
    }
    return config::find_task(cfg, args.task_id);
}

std::map<std::string, long long> load_lengths(const std::string& path) {
    std::map<std::string, long long> lengths;
    for (const auto& j : io::read_jsonl(path))
        lengths[j.at("problem_id").get<std::string>()] = j.at("L").get<long long>();
    return lengths;
}

std::map<std::string, long long> lengths_from_outcomes(
    const std::vector<scoring::ScoredOutcome>& outcomes) {
    std::map<std::string, long long> lengths;
    for (const auto& o : outcomes) {
        auto& L = lengths[o.problem_id];
        L = std::max(L, o.c);
    }
    return lengths;
}

int cmd_split(const CommonArgs& common, const std::string& contexts_path,
              const std::string& out_path) {
    const config::TaskConfig task = resolve_task(common);
    std::vector<json> rows;
    for (const auto& ctx : io::read_contexts(contexts_path)) {
        if (!ctx.task_id.empty() && ctx.task_id != task.task_id) continue;
        rows.push_back(io::to_json(corpus::split_units(ctx.context, task.unit_spec,
                                                       ctx.problem_id)));
    }
    io::write_jsonl(out_path, rows);
    std::cout << "split: " << rows.size() << " problems -> " << out_path << "\n";
    return 0;
}

int cmd_plan(const CommonArgs& common, const std::string& unitized_path,
             const std::string& out_path) {
    const config::TaskConfig task = resolve_task(common);
    std::vector<json> rows;
    for (const auto& j : io::read_jsonl(unitized_path)) {
        auto ctx = io::unitized_from_json(j);
        auto plan = corpus::build_plan(ctx.length(), pipeline::ladder_for(task, ctx.length()),
                                       task.strategy,
                                       pipeline::problem_seed(task, ctx.problem_id),
                                       ctx.problem_id);
        rows.push_back(io::to_json(plan));
    }
    io::write_jsonl(out_path, rows);
    std::cout << "plan: " << rows.size() << " problems -> " << out_path << "\n";
    return 0;
}

int cmd_score(const CommonArgs& common, const std::string& contexts_path,
              const std::string& outputs_path, const std::string& out_path) {
    const config::TaskConfig task = resolve_task(common);
    std::map<std::string, io::ContextRow> ctx_by_id;
    for (auto& ctx : io::read_contexts(contexts_path)) ctx_by_id[ctx.problem_id] = ctx;

    std::vector<json> rows;
    for (const auto& j : io::read_jsonl(outputs_path)) {
        const io::OutputRow out_row = io::output_from_json(j);
        auto it = ctx_by_id.find(out_row.problem_id);
        if (it == ctx_by_id.end())
            throw InputError("score: no context row for problem " + out_row.problem_id);
        scoring::ScoredOutcome o;
        o.problem_id = out_row.problem_id;
        o.start = out_row.start;
        o.c = out_row.c;
        o.metric = task.metric;
        const auto ex = scoring::extract_answer(out_row.output, task.extractor);
        if (ex.idk || it->second.answers.empty())
            o.idk = true;
        else
            o.value = scoring::score(ex.answer, it->second.answers, task.metric);
        rows.push_back(io::to_json(o));
    }
    io::write_jsonl(out_path, rows);
    std::cout << "score: " << rows.size() << " outcomes -> " << out_path << "\n";
    return 0;
}

int cmd_diptest(const CommonArgs& common, const std::string& scored_path,
                const std::string& out_path, bool no_task_rule) {
    const config::TaskConfig task = resolve_task(common);
    std::vector<scoring::ScoredOutcome> outcomes;
    for (const auto& j : io::read_jsonl(scored_path)) outcomes.push_back(io::scored_from_json(j));
    auto split = pipeline::route_scenarios(task, outcomes, !no_task_rule);
    std::vector<json> rows;
    for (const auto& row : split.rows) rows.push_back(io::to_json(row));
    io::write_jsonl(out_path, rows);
    std::cout << "diptest: " << rows.size() << " problems (" << split.cow.size()
              << " cow outcomes, " << split.pig.size() << " pig outcomes) -> " << out_path
              << "\n";
    return 0;
}

int cmd_fit(const CommonArgs& common, const std::string& scored_path,
            const std::string& scenario, const std::string& lengths_path,
            const std::string& fits_path, const std::string& noise_path) {
    const config::TaskConfig task = resolve_task(common);
    std::vector<scoring::ScoredOutcome> outcomes;
    for (const auto& j : io::read_jsonl(scored_path)) outcomes.push_back(io::scored_from_json(j));
    if (outcomes.empty()) throw InputError("fit: no outcomes");

    const auto lengths =
        lengths_path.empty() ? lengths_from_outcomes(outcomes) : load_lengths(lengths_path);
    std::map<std::string, em::CandidateGrid> grids;
    for (const auto& [id, L] : lengths)
        grids[id] = em::build_grid(pipeline::ladder_for(task, L), L);

    std::vector<json> rows;
    json noise;
    if (scenario == "cow") {
        std::vector<em::CowRecord> records;
        for (const auto& o : outcomes)
            records.push_back({o.problem_id, o.c,
                               scoring::to_cow_outcome(o, task.binarize_threshold)});
        auto result = em::fit_cow(records, grids, lengths, task.em.t_cow);
        for (const auto& fit : result.fits) rows.push_back(io::fit_to_json(fit, "cow"));
        noise = io::noise_to_json(result.noise, "cow");
    } else if (scenario == "pig") {
        std::vector<em::PigRecord> records;
        for (const auto& o : outcomes) records.push_back({o.problem_id, o.c, o.idk, o.value});
        auto result = em::fit_pig(records, grids, lengths, task.em.t_pig);
        for (const auto& fit : result.fits) rows.push_back(io::fit_to_json(fit, "pig"));
        noise = io::noise_to_json(result.noise, "pig");
    } else {
        throw InputError("fit: --scenario must be cow or pig");
    }
    io::write_jsonl(fits_path, rows);
    std::ofstream out(noise_path, std::ios::trunc);
    out << noise.dump() << "\n";
    std::cout << "fit: " << rows.size() << " problems -> " << fits_path << ", " << noise_path
              << "\n";
    return 0;
}

int cmd_assign(const CommonArgs& common, const std::string& fits_path,
               const std::string& lengths_path, const std::string& out_path,
               const std::string& histogram_path) {
    const config::TaskConfig task = resolve_task(common);
    const auto lengths = load_lengths(lengths_path);
    long long max_L = 0;
    for (const auto& [id, L] : lengths) max_L = std::max(max_L, L);
    taxonomy::Thresholds thr =
        taxonomy::thresholds_from_lengths(pipeline::ladder_for(task, max_L), max_L);
    if (task.thresholds.lambda_p) thr.lambda_p = *task.thresholds.lambda_p;
    if (task.thresholds.k_p) thr.k_p = *task.thresholds.k_p;
    if (task.thresholds.lambda_q) thr.lambda_q = *task.thresholds.lambda_q;

    std::vector<json> rows;
    std::map<std::string, long long> hist;
    for (const auto& j : io::read_jsonl(fits_path)) {
        auto fit_row = io::fit_from_json(j);
        io::CategoryRow row;
        row.problem_id = fit_row.fit.problem_id;
        row.lambda = fit_row.fit.lambda_star;
        row.k = fit_row.fit.k_star;
        auto lit = lengths.find(row.problem_id);
        if (lit == lengths.end())
            throw InputError("assign: no context length for problem " + row.problem_id);
        row.category = taxonomy::assign(row.lambda, row.k, thr, lit->second);
        ++hist[taxonomy::to_string(row.category)];
        rows.push_back(io::to_json(row));
    }
    io::write_jsonl(out_path, rows);
    if (!histogram_path.empty()) {
        std::ofstream out(histogram_path, std::ios::trunc);
        out << "task_id,category,count\n";
        for (const auto& [cat, count] : hist)
            out << task.task_id << "," << cat << "," << count << "\n";
    }
    std::cout << "assign: thresholds lambda_p=" << thr.lambda_p << " k_p=" << thr.k_p
              << " lambda_q=" << thr.lambda_q << " -> " << out_path << "\n";
    return 0;
}

int cmd_synth(const std::string& spec_path, const std::string& out_path,
              const std::string& sidecar_path) {
    std::ifstream in(spec_path);
    if (!in) throw InputError("cannot open synth spec: " + spec_path);
    json j;
    in >> j;

    synth::SynthSpec spec;
    spec.problem_id = j.value("problem_id", "synthetic");
    spec.L = j.at("L").get<long long>();
    spec.lambda = j.at("lambda").get<long long>();
    spec.k = j.at("k").get<long long>();
    spec.prior_oracle = j.value("prior_oracle", 1.0);
    if (j.contains("noise")) spec.noise = io::noise_from_json(j.at("noise"));
    if (j.contains("oracle_nonpar"))
        spec.oracle_nonpar = io::noise_from_json(j.at("oracle_nonpar"));
    spec.scenario = j.value("scenario", "cow") == "pig" ? synth::SynthSpec::Scenario::PIG
                                                        : synth::SynthSpec::Scenario::COW;
    if (j.value("pig_draw", "grid_pmf") == "density")
        spec.pig_draw = synth::SynthSpec::PigDraw::Density;
    spec.seed = j.value("seed", 0ULL);
    const auto lengths = j.at("lengths").get<std::vector<long long>>();
    corpus::PlanStrategy strategy;  // exhaustive
    spec.plan = corpus::build_plan(spec.L, lengths, strategy, spec.seed, spec.problem_id);

    std::vector<json> rows;
    if (spec.scenario == synth::SynthSpec::Scenario::COW) {
        for (const auto& r : synth::gen_cow(spec)) {
            scoring::ScoredOutcome o;
            o.problem_id = r.problem_id;
            o.c = r.c;
            o.metric = scoring::Metric::Accuracy;
            switch (r.outcome) {
                case scoring::CowOutcome::One: o.value = 1.0; break;
                case scoring::CowOutcome::Zero: o.value = 0.0; break;
                case scoring::CowOutcome::Idk: o.idk = true; break;
            }
            rows.push_back(io::to_json(o));
        }
    } else {
        for (const auto& r : synth::gen_pig(spec)) {
            scoring::ScoredOutcome o;
            o.problem_id = r.problem_id;
            o.c = r.c;
            o.metric = scoring::Metric::RougeL;
            o.idk = r.idk;
            o.value = r.s;
            rows.push_back(io::to_json(o));
        }
    }
    io::write_jsonl(out_path, rows);
    if (!sidecar_path.empty()) {
        json sidecar{{"problem_id", spec.problem_id},
                     {"L", spec.L},
                     {"lambda", spec.lambda},
                     {"k", spec.k},
                     {"prior_oracle", spec.prior_oracle},
                     {"seed", spec.seed}};
        std::ofstream out(sidecar_path, std::ios::trunc);
        out << sidecar.dump() << "\n";
    }
    std::cout << "synth: " << rows.size() << " records -> " << out_path << "\n";
    return 0;
}

int cmd_compare(const std::string& ref_fits, const std::string& test_fits,
                const std::string& ref_noise, const std::string& test_noise,
                const std::string& out_path, const std::string& csv_path) {
    auto load_fits = [](const std::string& path) {
        std::vector<em::ProblemFit> fits;
        for (const auto& j : io::read_jsonl(path)) fits.push_back(io::fit_from_json(j).fit);
        return fits;
    };
    auto load_noise = [](const std::string& path) {
        std::ifstream in(path);
        if (!in) throw InputError("cannot open noise file: " + path);
        json j;
        in >> j;
        return io::noise_from_json(j);
    };
    const auto ref = load_fits(ref_fits);
    const auto test = load_fits(test_fits);
    const auto cmp = analysis::compare_runs(ref, test, load_noise(ref_noise),
                                            load_noise(test_noise));

    json j{{"delta_lambda_median", cmp.delta_lambda_median},
           {"delta_k_median", cmp.delta_k_median},
           {"kl_noise", cmp.kl_noise},
           {"n_compared", cmp.n_compared}};
    j["spearman_lambda"] = cmp.spearman_lambda ? json(*cmp.spearman_lambda) : json(nullptr);
    j["spearman_k"] = cmp.spearman_k ? json(*cmp.spearman_k) : json(nullptr);
    std::ofstream out(out_path, std::ios::trunc);
    out << j.dump(2) << "\n";

    if (!csv_path.empty()) {
        std::map<std::string, const em::ProblemFit*> test_by_id;
        for (const auto& f : test) test_by_id[f.problem_id] = &f;
        std::ofstream csv(csv_path, std::ios::trunc);
        csv << "problem_id,ref_lambda,ref_k,test_lambda,test_k,delta_lambda,delta_k\n";
        for (const auto& f : ref) {
            auto it = test_by_id.find(f.problem_id);
            if (it == test_by_id.end()) continue;
            if (f.lambda_star == 0 || it->second->lambda_star == 0) continue;
            csv << f.problem_id << "," << f.lambda_star << "," << f.k_star << ","
                << it->second->lambda_star << "," << it->second->k_star << ","
                << analysis::rel_change(static_cast<double>(f.lambda_star),
                                        static_cast<double>(it->second->lambda_star))
                << ","
                << analysis::rel_change(static_cast<double>(f.k_star),
                                        static_cast<double>(it->second->k_star))
                << "\n";
        }
    }
    std::cout << "compare: n=" << cmp.n_compared << " -> " << out_path << "\n";
    return 0;
}

int cmd_cover(long long L, long long C, long long lambda_max, long long k_max, double s,
              bool use_rho, const std::string& out_path) {
    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path, std::ios::trunc);
        out = &file;
    }
    *out << "lambda,k,value\n";
    for (long long lambda = 1; lambda <= lambda_max; ++lambda) {
        for (long long k = 1; k <= k_max; ++k) {
            double v;
            if (use_rho)
                v = cover::rho(s, lambda, k, L, C);
            else
                v = cover::pi(lambda, k, L, C);
            *out << lambda << "," << k << "," << v << "\n";
        }
    }
    return 0;
}

int cmd_report(const std::string& categories_path, const std::string& tasks_path,
               const std::string& out_dir, bool svg) {
    std::map<std::string, std::string> task_of;
    if (!tasks_path.empty())
        for (const auto& j : io::read_jsonl(tasks_path))
            task_of[j.at("problem_id").get<std::string>()] =
                j.value("task_id", std::string("task"));
    std::map<std::string, std::vector<io::CategoryRow>> by_task;
    for (const auto& j : io::read_jsonl(categories_path)) {
        auto row = io::category_from_json(j);
        auto it = task_of.find(row.problem_id);
        by_task[it == task_of.end() ? "task" : it->second].push_back(row);
    }
    std::filesystem::create_directories(out_dir);
    pipeline::emit_report(by_task, out_dir, svg);
    std::cout << "report: " << by_task.size() << " tasks -> " << out_dir << "\n";
    return 0;
}

int cmd_run(const CommonArgs& common, pipeline::RunOptions opt) {
    config::Config cfg = config::load_config(common.config_path);
    const config::TaskConfig task = common.task_id.empty() && cfg.tasks.size() == 1
                                        ? cfg.tasks.front()
                                        : config::find_task(cfg, common.task_id);
    pipeline::run_task(cfg, task, opt);
    std::cout << "run: task " << task.task_id << " -> " << opt.out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dolce: long-context task profiling via sampled-span probing"};
    app.require_subcommand(1);

    CommonArgs common;
    std::string contexts, unitized, outputs, scored, fits, noise, lengths, out, csv, sidecar;
    std::string ref_fits, test_fits, ref_noise, test_noise, scenario, spec_path, tasks_path;
    bool no_task_rule = false, svg = false, use_rho = false;
    long long L = 50, C = 5, lambda_max = 25, k_max = 25;
    double s = 1.0;
    pipeline::RunOptions run_opt;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config_path, "task config JSON")->required();
        sub->add_option("--task", common.task_id, "task id (optional if single-task config)");
    };

    auto* sp = app.add_subcommand("split", "split contexts into units");
    add_common(sp);
    sp->add_option("--contexts", contexts)->required();
    sp->add_option("--out", out)->required();

    auto* pl = app.add_subcommand("plan", "build observation span plans");
    add_common(pl);
    pl->add_option("--unitized", unitized)->required();
    pl->add_option("--out", out)->required();

    auto* sc = app.add_subcommand("score", "extract and score model outputs");
    add_common(sc);
    sc->add_option("--contexts", contexts)->required();
    sc->add_option("--outputs", outputs)->required();
    sc->add_option("--out", out)->required();

    auto* dp = app.add_subcommand("diptest", "route problems to COW or PIG");
    add_common(dp);
    dp->add_option("--scored", scored)->required();
    dp->add_option("--out", out)->required();
    dp->add_flag("--no-task-rule", no_task_rule, "skip the task-level majority rule");

    auto* ft = app.add_subcommand("fit", "fit lambda and k per problem");
    add_common(ft);
    ft->add_option("--scored", scored)->required();
    ft->add_option("--scenario", scenario, "cow|pig")->required();
    ft->add_option("--lengths", lengths, "problem_id -> L JSONL (default: max C per problem)");
    ft->add_option("--fits", fits)->required();
    ft->add_option("--noise", noise)->required();

    auto* as = app.add_subcommand("assign", "assign focus categories");
    add_common(as);
    as->add_option("--fits", fits)->required();
    as->add_option("--lengths", lengths)->required();
    as->add_option("--out", out)->required();
    as->add_option("--histogram", csv, "per-task category histogram CSV");

    auto* sy = app.add_subcommand("synth", "generate synthetic observation records");
    sy->add_option("--spec", spec_path, "synthetic spec JSON")->required();
    sy->add_option("--out", out)->required();
    sy->add_option("--sidecar", sidecar, "true-parameter sidecar JSON");

    auto* cp = app.add_subcommand("compare", "compare two fitted runs");
    cp->add_option("--ref", ref_fits)->required();
    cp->add_option("--test", test_fits)->required();
    cp->add_option("--ref-noise", ref_noise)->required();
    cp->add_option("--test-noise", test_noise)->required();
    cp->add_option("--out", out)->required();
    cp->add_option("--csv", csv, "per-problem CSV");

    auto* cv = app.add_subcommand("cover", "print cover-probability tables as CSV");
    cv->add_option("--L", L);
    cv->add_option("--C", C);
    cv->add_option("--lambda-max", lambda_max);
    cv->add_option("--k-max", k_max);
    cv->add_option("--s", s, "covered fraction (rho tables)");
    cv->add_flag("--rho", use_rho, "emit rho instead of pi");
    cv->add_option("--out", out);

    auto* rp = app.add_subcommand("report", "emit stacked-category and heatmap CSVs");
    rp->add_option("--categories", contexts)->required();
    rp->add_option("--tasks", tasks_path, "problem_id -> task_id JSONL");
    rp->add_option("--out-dir", out)->required();
    rp->add_flag("--svg", svg);

    auto* rn = app.add_subcommand("run", "run the full pipeline for one task");
    add_common(rn);
    rn->add_option("--contexts", run_opt.contexts_path);
    rn->add_option("--outputs", run_opt.outputs_path, "pre-collected model outputs JSONL");
    rn->add_option("--scored", run_opt.scored_path, "pre-scored outcomes JSONL");
    rn->add_option("--lengths", run_opt.lengths_path);
    rn->add_option("--out-dir", run_opt.out_dir)->required();
    rn->add_flag("--force", run_opt.force, "recompute all stages");
    rn->add_flag("--svg", run_opt.emit_svg);

    CLI11_PARSE(app, argc, argv);

    try {
        if (sp->parsed()) return cmd_split(common, contexts, out);
        if (pl->parsed()) return cmd_plan(common, unitized, out);
        if (sc->parsed()) return cmd_score(common, contexts, outputs, out);
        if (dp->parsed()) return cmd_diptest(common, scored, out, no_task_rule);
        if (ft->parsed()) return cmd_fit(common, scored, scenario, lengths, fits, noise);
        if (as->parsed()) return cmd_assign(common, fits, lengths, out, csv);
        if (sy->parsed()) return cmd_synth(spec_path, out, sidecar);
        if (cp->parsed())
            return cmd_compare(ref_fits, test_fits, ref_noise, test_noise, out, csv);
        if (cv->parsed()) return cmd_cover(L, C, lambda_max, k_max, s, use_rho, out);
        if (rp->parsed()) return cmd_report(contexts, tasks_path, out, svg);
        if (rn->parsed()) return cmd_run(common, run_opt);
    } catch (const ObserverError& e) {
        std::cerr << "observer error: " << e.what() << "\n";
        return 3;
    } catch (const CapacityError& e) {
        std::cerr << "capacity error: " << e.what() << "\n";
        return 2;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
