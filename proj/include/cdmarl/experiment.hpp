#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cdmarl/config.hpp"
#include "cdmarl/dcpc.hpp"
#include "cdmarl/inference.hpp"
#include "cdmarl/training.hpp"

namespace cdmarl {

// Normalizers from the config when pinned there, otherwise calibrated by
// running random powers on the configured scenario.
Normalizers resolve_normalizers(const RunConfig& cfg, uint64_t seed);

// One agent per pair, seeded independently from the master seed.
std::vector<DdpgAgent> make_agents(const RunConfig& cfg, uint64_t seed);

struct TrainOutputs {
    std::vector<std::string> artifact_paths;
    std::string rewards_csv;
    std::string run_log_csv;
    std::string meta_path;
    Normalizers normalizers;
    TrainingResult result;
};

// Full training pipeline: resolve normalizers, train (aggregating per the
// config), export one actor artifact per agent, and write the reward
// trajectory, the run log, and a metadata bundle for later evaluation.
TrainOutputs cmd_train(const RunConfig& cfg, const std::string& out_dir, uint64_t seed);

// In-memory variant used by tests and the variance study; honors the
// aggregation mode (across agents, or lockstep across runs).
struct TrainedSystem {
    std::vector<DdpgAgent> agents;
    TrainingResult result;
    Normalizers normalizers;
};
TrainedSystem train_system(const RunConfig& cfg, uint64_t seed);

struct RunMeta {
    RunConfig config;
    uint64_t seed = 0;
    Normalizers normalizers;
    std::vector<std::string> artifacts; // file names relative to the bundle dir
};
void write_run_meta(const std::string& path, const RunMeta& meta);
RunMeta read_run_meta(const std::string& path);

enum class PolicyKind { Drl, Dcpc, MaxPower };
PolicyKind policy_from_name(const std::string& name);
std::string policy_name(PolicyKind kind);

struct CellResult {
    double tx_db = 0.0;
    double rx_db = 0.0;
    double mean_power = 0.0; // mW, over transmissions
    double pdr = 0.0;
    long transmissions = 0;
    long successes = 0;
    std::vector<StepRecord> records;
};

struct EvalReport {
    PolicyKind policy = PolicyKind::MaxPower;
    std::vector<CellResult> cells;
    double mean_power = 0.0; // unweighted mean over cells
    double mean_pdr = 0.0;
};

// Frozen-policy evaluation over the gain grid: every cell adds one
// (tx_db, rx_db) offset combination to all node gains and replays
// packets_per_experiment slots. DRL needs a training bundle (artifacts +
// meta); DCPC and max-power run standalone. model_dir may be empty for the
// latter two.
EvalReport cmd_eval(const RunConfig& cfg, PolicyKind policy, const std::string& model_dir,
                    const std::string& out_dir, uint64_t seed);

struct VarianceReport {
    int n_runs = 0;
    int n_agents = 0;
    // indexed [mode][agent]; mode 0 = no aggregation, mode 1 = aggregation
    std::vector<std::vector<double>> variance;
    std::vector<std::vector<std::vector<double>>> finals; // [mode][agent][run]
};

// Trains n_runs independently seeded replicas with and without aggregation
// (same seed list for both modes) and reports the across-run variance of the
// final 200-step mean reward per agent.
VarianceReport cmd_variance_study(const RunConfig& cfg, int n_runs, const std::string& out_dir,
                                  uint64_t seed);

struct BenchReport {
    LatencyStats engine;
    LatencyStats naive;
    std::string model_path;
};

BenchReport cmd_bench(const std::string& model_path, long n_runs, const std::string& out_dir);

// final 200-step mean reward per agent of a finished run
std::vector<double> final_window_means(const TrainingResult& result, int n_agents,
                                       long n_steps, long window = 200);

} // namespace cdmarl
