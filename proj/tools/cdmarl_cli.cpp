#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"

#include "cdmarl/config.hpp"
#include "cdmarl/csv.hpp"
#include "cdmarl/experiment.hpp"

namespace {

cdmarl::RunConfig load_or_default(const std::string& config_path) {
    if (config_path.empty()) return cdmarl::default_config();
    return cdmarl::load_config_file(config_path);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"DS-CDMA power-control lab: DDPG training, DCPC baseline, model export "
                 "and latency benchmarking"};
    app.require_subcommand(1);

    std::string config_path;
    uint64_t seed = 1;
    std::string out_dir = "out";

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file (omit for built-in default)");
        cmd->add_option("--seed", seed, "master seed");
        cmd->add_option("--out", out_dir, "output directory");
    };

    auto* train = app.add_subcommand("train", "train DDPG agents and export actor artifacts");
    add_common(train);
    bool no_aggregation = false;
    train->add_flag("--no-aggregation", no_aggregation, "disable model aggregation");

    auto* eval = app.add_subcommand("eval", "run the gain-grid evaluation with a frozen policy");
    add_common(eval);
    std::string policy = "drl";
    std::string models_dir;
    eval->add_option("--policy", policy, "drl | dcpc | maxpower")
        ->check(CLI::IsMember({"drl", "dcpc", "maxpower"}));
    eval->add_option("--models", models_dir, "training bundle directory (required for drl)");

    auto* variance = app.add_subcommand("variance-study",
                                        "train replicas with and without aggregation and "
                                        "compare across-run reward variance");
    add_common(variance);
    int n_runs = 5;
    variance->add_option("--runs", n_runs, "replicas per mode (>= 3)");

    auto* bench = app.add_subcommand("bench", "measure single-inference latency of an artifact");
    bench->add_option("--out", out_dir, "output directory");
    std::string model_path;
    long bench_runs = 30000;
    bench->add_option("--model", model_path, "actor artifact path")->required();
    bench->add_option("--runs", bench_runs, "timed inference calls (>= 1000)");

    auto* print_config = app.add_subcommand("print-config", "dump the built-in default config");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) {
            cdmarl::RunConfig cfg = load_or_default(config_path);
            if (no_aggregation) cfg.aggregation.enabled = false;
            const auto out = cdmarl::cmd_train(cfg, out_dir, seed);
            std::printf("trained %zu agents; artifacts + CSVs in %s\n",
                        out.artifact_paths.size(), out_dir.c_str());
        } else if (eval->parsed()) {
            cdmarl::RunConfig cfg = load_or_default(config_path);
            const auto kind = cdmarl::policy_from_name(policy);
            const auto report = cdmarl::cmd_eval(cfg, kind, models_dir, out_dir, seed);
            std::printf("%s: mean power %s mW, mean PDR %s over %zu cells\n", policy.c_str(),
                        cdmarl::fmt_double(report.mean_power).c_str(),
                        cdmarl::fmt_double(report.mean_pdr).c_str(), report.cells.size());
        } else if (variance->parsed()) {
            cdmarl::RunConfig cfg = load_or_default(config_path);
            const auto report = cdmarl::cmd_variance_study(cfg, n_runs, out_dir, seed);
            for (int a = 0; a < report.n_agents; ++a)
                std::printf("agent %d: variance %s (no aggregation) vs %s (aggregation)\n", a,
                            cdmarl::fmt_double(report.variance[0][static_cast<size_t>(a)]).c_str(),
                            cdmarl::fmt_double(report.variance[1][static_cast<size_t>(a)]).c_str());
        } else if (bench->parsed()) {
            const auto report = cdmarl::cmd_bench(model_path, bench_runs, out_dir);
            std::printf("optimized median %.0f ns, naive median %.0f ns (%ld runs)\n",
                        report.engine.median_ns, report.naive.median_ns, report.engine.n_runs);
        } else if (print_config->parsed()) {
            std::printf("%s\n", cdmarl::config_to_json(cdmarl::default_config()).c_str());
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
