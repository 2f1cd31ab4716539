#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "zmerge/metrics.hpp"
#include "zmerge/runner.hpp"

namespace fs = std::filesystem;
using namespace zmerge;

namespace {

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> episodes;
    std::optional<std::string> policy;
    std::optional<std::string> out;
    std::optional<std::string> checkpoint;
    std::optional<bool> trace;
};

void add_common(CLI::App* app, CommonFlags& f) {
    app->add_option("--config", f.config_path, "JSON config file");
    app->add_option("--seed", f.seed, "RNG seed");
    app->add_option("--episodes", f.episodes, "episode count");
    app->add_option("--policy", f.policy,
                    "zmerge | baseline1 | baseline2 | baseline3 | random");
    app->add_option("--out", f.out, "output directory");
    app->add_option("--checkpoint", f.checkpoint, "checkpoint path (network policies)");
    app->add_flag("--trace,!--no-trace", f.trace, "write trace.ndjson");
}

// precedence: defaults < config file < ZMERGE_* env < explicit flags
RunConfig resolve_config(const CommonFlags& f) {
    RunConfig cfg;
    if (!f.config_path.empty()) cfg = load_run_config(f.config_path);
    apply_env_overrides(cfg);
    if (f.seed) cfg.sim.seed = *f.seed;
    if (f.episodes) cfg.episodes = *f.episodes;
    if (f.policy) cfg.policy = *f.policy;
    if (f.out) cfg.out_dir = *f.out;
    if (f.checkpoint) cfg.checkpoint = *f.checkpoint;
    if (f.trace) cfg.trace = *f.trace;
    return cfg;
}

void save_metrics_json(const std::vector<PolicyEvalResult>& results,
                       const std::string& outdir) {
    fs::create_directories(outdir);
    std::ofstream os(fs::path(outdir) / "metrics.json");
    os << eval_results_to_json(results) << '\n';
}

int run_eval_command(RunConfig cfg) {
    cfg.mode = "eval";
    auto result = run_evaluation(cfg, cfg.policy);
    const bool network_policy = cfg.policy == "zmerge" || cfg.policy == "baseline3";
    if (network_policy && cfg.latency_iters > 0) {
        auto policy = make_policy(cfg.policy, cfg.sim, cfg.checkpoint);
        result.latency_ms = measure_inference_latency(cfg, *policy, cfg.latency_iters);
    }
    std::vector<PolicyEvalResult> results{std::move(result)};
    save_metrics_json(results, cfg.out_dir);
    emit_reports(results, cfg.out_dir);
    const auto eff = agg_mean_speed(results[0]);
    const auto col = agg_collision_rate(results[0]);
    const auto suc = agg_success_rate(results[0]);
    std::cout << "policy=" << results[0].policy << " pr=" << cfg.sim.penetration_rate
              << " episodes=" << results[0].episodes.size() << " mean_speed=" << eff.mean
              << " collision_rate=" << col.mean;
    if (suc.present) std::cout << " success_rate=" << suc.mean;
    std::cout << '\n';
    return 0;
}

int run_sweep_command(RunConfig cfg, const std::vector<double>& pr_percent,
                      const std::string& policies_csv, const std::string& checkpoint_b3) {
    std::vector<std::string> policies;
    std::stringstream ss(policies_csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) policies.push_back(item);
    }
    std::vector<PolicyEvalResult> results;
    for (const double pr : pr_percent) {
        for (const auto& pol : policies) {
            RunConfig c = cfg;
            c.sim.penetration_rate = pr / 100.0;
            c.policy = pol;
            if (pol == "baseline3" && !checkpoint_b3.empty()) c.checkpoint = checkpoint_b3;
            results.push_back(run_evaluation(c, pol));
            std::cout << "swept policy=" << pol << " pr=" << pr << "%\n";
        }
    }
    save_metrics_json(results, cfg.out_dir);
    emit_reports(results, cfg.out_dir);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"zone-aware on-ramp merging: training, evaluation, reports"};
    app.require_subcommand(1);

    CommonFlags train_flags, eval_flags, sweep_flags;
    auto* train_cmd = app.add_subcommand("train", "train the shared PDQN policy");
    add_common(train_cmd, train_flags);

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a policy and emit reports");
    add_common(eval_cmd, eval_flags);
    int latency_iters = -1;
    eval_cmd->add_option("--latency-iters", latency_iters,
                         "inference latency samples (0 disables)");

    auto* sweep_cmd =
        app.add_subcommand("sweep", "evaluate policies across penetration rates");
    add_common(sweep_cmd, sweep_flags);
    std::vector<double> pr_list{5, 10, 20, 40, 60};
    std::string policies_csv = "zmerge,baseline1,baseline2,random";
    std::string checkpoint_b3;
    sweep_cmd->add_option("--pr-list", pr_list, "penetration rates, percent");
    sweep_cmd->add_option("--policies", policies_csv, "comma-separated policy list");
    sweep_cmd->add_option("--checkpoint-b3", checkpoint_b3, "baseline3 checkpoint");

    auto* report_cmd = app.add_subcommand("report", "regenerate CSVs from metrics.json");
    std::string metrics_path, report_out;
    report_cmd->add_option("--metrics", metrics_path, "metrics.json path")->required();
    report_cmd->add_option("--out", report_out, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(train_cmd)) {
            RunConfig cfg = resolve_config(train_flags);
            cfg.mode = "train";
            const auto result = run_training(cfg);
            std::cout << "trained episodes=" << result.episodes
                      << " env_steps=" << result.env_steps
                      << " gradient_steps=" << result.gradient_steps
                      << " checkpoint=" << result.checkpoint_path << '\n';
        } else if (app.got_subcommand(eval_cmd)) {
            RunConfig cfg = resolve_config(eval_flags);
            if (latency_iters >= 0) cfg.latency_iters = latency_iters;
            return run_eval_command(std::move(cfg));
        } else if (app.got_subcommand(sweep_cmd)) {
            RunConfig cfg = resolve_config(sweep_flags);
            return run_sweep_command(std::move(cfg), pr_list, policies_csv, checkpoint_b3);
        } else if (app.got_subcommand(report_cmd)) {
            std::ifstream is(metrics_path);
            if (!is) throw std::runtime_error("cannot open " + metrics_path);
            std::stringstream buf;
            buf << is.rdbuf();
            emit_reports(eval_results_from_json(buf.str()), report_out);
        }
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"error", e.what()}}.dump() << '\n';
        return 1;
    }
    return 0;
}
