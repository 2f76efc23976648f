#include "cdmarl/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

#include "cdmarl/csv.hpp"

namespace cdmarl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// seed stream tags, one per subsystem
constexpr uint64_t kCalibrationStream = 10;
constexpr uint64_t kAgentStreamBase = 100;
constexpr uint64_t kTrainStream = 20;
constexpr uint64_t kReplicaStreamBase = 1000;
constexpr uint64_t kVarianceStreamBase = 2000;
constexpr uint64_t kCellStreamBase = 3000;

void ensure_dir(const std::string& dir) {
    if (!dir.empty()) fs::create_directories(dir);
}

std::string join(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

// run jobs 0..n-1 on a bounded number of worker threads; results land by index
template <typename Fn>
void parallel_for_index(int n, Fn&& fn) {
    const unsigned workers =
        std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                        static_cast<unsigned>(n)));
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mu;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mu);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

TrainingResult train_lockstep_runs(const RunConfig& cfg, uint64_t seed,
                                   std::vector<DdpgAgent>& out_agents,
                                   const Normalizers& norm) {
    const int replicas = std::max(2, cfg.aggregation.run_replicas);
    struct Replica {
        CdmaEnv env;
        std::vector<DdpgAgent> agents;
        std::unique_ptr<TrainingDriver> driver;
        Replica(CdmaEnv e, std::vector<DdpgAgent> a) : env(std::move(e)), agents(std::move(a)) {}
    };

    std::vector<std::unique_ptr<Replica>> reps;
    for (int r = 0; r < replicas; ++r) {
        const uint64_t rs = derive_seed(seed, kReplicaStreamBase + static_cast<uint64_t>(r));
        auto rep = std::make_unique<Replica>(CdmaEnv(cfg.scenario, cfg.traffic, norm),
                                             make_agents(cfg, rs));
        rep->driver = std::make_unique<TrainingDriver>(rep->env, rep->agents, cfg.training,
                                                       std::nullopt, rs);
        reps.push_back(std::move(rep));
    }

    const int period = cfg.aggregation.policy.period;
    TrainingResult combined;
    for (long step = 1; step <= cfg.training.n_steps; ++step) {
        for (auto& rep : reps) rep->driver->step_once();

        if (cfg.aggregation.enabled && step % period == 0) {
            // average each agent's actor across the lockstep replicas
            const int n_agents = static_cast<int>(reps[0]->agents.size());
            std::vector<double> weights(static_cast<size_t>(replicas),
                                        1.0 / static_cast<double>(replicas));
            for (int a = 0; a < n_agents; ++a) {
                std::vector<nn::MlpParams> actors;
                for (auto& rep : reps) actors.push_back(rep->agents[static_cast<size_t>(a)].actor());
                const nn::MlpParams avg = aggregate(actors, weights);
                for (auto& rep : reps) rep->agents[static_cast<size_t>(a)].install_actor(avg);
            }
            combined.aggregation_events.push_back(AggregationEvent{
                step, cfg.aggregation.policy.scope, static_cast<int>(replicas)});
        }
    }

    combined.records = reps[0]->driver->result().records;
    out_agents = std::move(reps[0]->agents);
    return combined;
}

} // namespace

Normalizers resolve_normalizers(const RunConfig& cfg, uint64_t seed) {
    if (cfg.normalizers.sinr_divisor && cfg.normalizers.interference_divisor)
        return Normalizers{*cfg.normalizers.sinr_divisor, *cfg.normalizers.interference_divisor};

    Normalizers calibrated = CdmaEnv::calibrate_normalizers(
        cfg.scenario, cfg.traffic, cfg.normalizers.calibration_slots,
        derive_seed(seed, kCalibrationStream));
    if (cfg.normalizers.sinr_divisor) calibrated.sinr_divisor = *cfg.normalizers.sinr_divisor;
    if (cfg.normalizers.interference_divisor)
        calibrated.interference_divisor = *cfg.normalizers.interference_divisor;
    return calibrated;
}

std::vector<DdpgAgent> make_agents(const RunConfig& cfg, uint64_t seed) {
    const int state_dim = cfg.scenario.n_pairs() + 3;
    std::vector<DdpgAgent> agents;
    agents.reserve(static_cast<size_t>(cfg.scenario.n_pairs()));
    for (int i = 0; i < cfg.scenario.n_pairs(); ++i)
        agents.emplace_back(state_dim, cfg.scenario.p_min, cfg.scenario.p_max, cfg.ddpg,
                            derive_seed(seed, kAgentStreamBase + static_cast<uint64_t>(i)));
    return agents;
}

TrainedSystem train_system(const RunConfig& cfg, uint64_t seed) {
    TrainedSystem sys;
    sys.normalizers = resolve_normalizers(cfg, seed);

    if (cfg.aggregation.enabled && cfg.aggregation.mode == AggregationMode::Runs) {
        sys.result = train_lockstep_runs(cfg, seed, sys.agents, sys.normalizers);
        return sys;
    }

    CdmaEnv env(cfg.scenario, cfg.traffic, sys.normalizers);
    sys.agents = make_agents(cfg, seed);
    std::optional<AggregationPolicy> agg;
    if (cfg.aggregation.enabled) agg = cfg.aggregation.policy;
    sys.result = run_training(env, sys.agents, cfg.training, agg,
                              derive_seed(seed, kTrainStream));
    return sys;
}

void write_run_meta(const std::string& path, const RunMeta& meta) {
    json j;
    j["config"] = json::parse(config_to_json(meta.config));
    j["seed"] = meta.seed;
    j["normalizers"] = {{"sinr_divisor", meta.normalizers.sinr_divisor},
                        {"interference_divisor", meta.normalizers.interference_divisor}};
    j["artifacts"] = meta.artifacts;
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << j.dump(2) << "\n";
}

RunMeta read_run_meta(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open run meta " + path);
    json j;
    try {
        j = json::parse(f);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    RunMeta meta;
    meta.config = config_from_json(j.at("config").dump());
    meta.seed = j.at("seed").get<uint64_t>();
    meta.normalizers.sinr_divisor = j.at("normalizers").at("sinr_divisor").get<double>();
    meta.normalizers.interference_divisor =
        j.at("normalizers").at("interference_divisor").get<double>();
    meta.artifacts = j.at("artifacts").get<std::vector<std::string>>();
    return meta;
}

TrainOutputs cmd_train(const RunConfig& cfg, const std::string& out_dir, uint64_t seed) {
    cfg.scenario.validate();
    ensure_dir(out_dir);

    TrainedSystem sys = train_system(cfg, seed);
    const uint64_t hash = config_hash(cfg);

    TrainOutputs out;
    out.normalizers = sys.normalizers;

    RunMeta meta;
    meta.config = cfg;
    meta.seed = seed;
    meta.normalizers = sys.normalizers;
    for (size_t i = 0; i < sys.agents.size(); ++i) {
        const std::string name = "actor_agent" + std::to_string(i) + ".mrng";
        const std::string path = join(out_dir, name);
        export_model(sys.agents[i].actor(), ActionBounds{cfg.scenario.p_min, cfg.scenario.p_max},
                     cfg.export_precision, path);
        out.artifact_paths.push_back(path);
        meta.artifacts.push_back(name);
    }

    out.rewards_csv = join(out_dir, "training_rewards.csv");
    {
        CsvWriter csv(out.rewards_csv, metadata_comment(hash, seed),
                      {"step", "agent", "reward", "power", "success"});
        for (const auto& r : sys.result.records)
            csv.row({std::to_string(r.step), std::to_string(r.agent), fmt_double(r.reward),
                     fmt_double(r.power), r.success ? "1" : "0"});
    }

    out.run_log_csv = join(out_dir, "run_log.csv");
    {
        CsvWriter csv(out.run_log_csv, metadata_comment(hash, seed),
                      {"step", "event", "scope", "participants"});
        for (const auto& e : sys.result.aggregation_events)
            csv.row({std::to_string(e.step), "aggregation",
                     e.scope == AggScope::ActorsAndCritics ? "actors_and_critics" : "actors",
                     std::to_string(e.participants)});
    }

    out.meta_path = join(out_dir, "run_meta.json");
    write_run_meta(out.meta_path, meta);
    out.result = std::move(sys.result);
    if (out.result.diverged())
        throw std::runtime_error("training diverged (partial outputs kept in " + out_dir +
                                 "): " + out.result.divergence_error);
    return out;
}

PolicyKind policy_from_name(const std::string& name) {
    if (name == "drl") return PolicyKind::Drl;
    if (name == "dcpc") return PolicyKind::Dcpc;
    if (name == "maxpower") return PolicyKind::MaxPower;
    throw std::invalid_argument("unknown policy '" + name + "'");
}

std::string policy_name(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::Drl: return "drl";
        case PolicyKind::Dcpc: return "dcpc";
        case PolicyKind::MaxPower: return "maxpower";
    }
    return "unknown";
}

namespace {

NetworkScenario cell_scenario(const NetworkScenario& base, double tx_db, double rx_db) {
    NetworkScenario s = base;
    if (s.tx_gain_db.empty()) s.tx_gain_db.assign(static_cast<size_t>(s.n_nodes()), 0.0);
    if (s.rx_gain_db.empty()) s.rx_gain_db.assign(static_cast<size_t>(s.n_nodes()), 0.0);
    for (auto& g : s.tx_gain_db) g += tx_db;
    for (auto& g : s.rx_gain_db) g += rx_db;
    return s;
}

CellResult eval_cell(const RunConfig& cfg, PolicyKind policy,
                     const std::vector<std::string>& artifact_paths, const Normalizers& norm,
                     double tx_db, double rx_db, uint64_t cell_seed) {
    CellResult cell;
    cell.tx_db = tx_db;
    cell.rx_db = rx_db;

    const NetworkScenario scn = cell_scenario(cfg.scenario, tx_db, rx_db);
    CdmaEnv env(scn, cfg.traffic, norm);
    const long n_slots = cfg.grid.packets_per_experiment;
    const double first_power = std::clamp(cfg.first_packet_power(), scn.p_min, scn.p_max);

    if (policy == PolicyKind::Dcpc) {
        DcpcRunResult run = run_dcpc(env, n_slots, first_power, cell_seed);
        cell.records = std::move(run.records);
        cell.mean_power = run.mean_power;
        cell.pdr = run.pdr;
        cell.transmissions = run.transmissions;
        cell.successes = run.successes;
        return cell;
    }

    std::vector<InferenceEngine> engines;
    if (policy == PolicyKind::Drl) {
        for (const auto& path : artifact_paths) engines.push_back(InferenceEngine::load(path));
        if (engines.size() != static_cast<size_t>(env.n_agents()))
            throw std::invalid_argument("expected " + std::to_string(env.n_agents()) +
                                        " actor artifacts, got " +
                                        std::to_string(engines.size()));
        for (const auto& e : engines)
            if (e.input_dim() != env.obs_dim())
                throw std::invalid_argument(
                    "model input dim " + std::to_string(e.input_dim()) +
                    " does not match observation dim " + std::to_string(env.obs_dim()));
    }

    env.reset(cell_seed);
    std::vector<ActionValue> actions(static_cast<size_t>(env.n_agents()));
    double power_sum = 0.0;

    for (long slot = 0; slot < n_slots; ++slot) {
        for (int i = 0; i < env.n_agents(); ++i) {
            double p;
            if (slot == 0) {
                p = first_power;
            } else if (policy == PolicyKind::MaxPower) {
                p = scn.p_max;
            } else {
                const std::vector<double> vec = env.observation_vector(env.observation(i));
                p = engines[static_cast<size_t>(i)].infer(vec);
            }
            actions[static_cast<size_t>(i)].power = p;
        }
        const StepOutcome out = env.step(actions);
        for (size_t i = 0; i < out.agents.size(); ++i) {
            const auto& a = out.agents[i];
            cell.records.push_back(StepRecord{slot + 1, static_cast<int>(i), a.power, a.sinr,
                                              a.transmitted, a.success, a.reward,
                                              a.next_obs.caused_interference});
            if (!a.transmitted) continue;
            ++cell.transmissions;
            power_sum += a.power;
            if (a.success) ++cell.successes;
        }
    }

    cell.pdr = cell.transmissions > 0 ? static_cast<double>(cell.successes) /
                                            static_cast<double>(cell.transmissions)
                                      : 0.0;
    cell.mean_power =
        cell.transmissions > 0 ? power_sum / static_cast<double>(cell.transmissions) : 0.0;
    return cell;
}

} // namespace

EvalReport cmd_eval(const RunConfig& cfg, PolicyKind policy, const std::string& model_dir,
                    const std::string& out_dir, uint64_t seed) {
    cfg.scenario.validate();
    ensure_dir(out_dir);

    Normalizers norm;
    std::vector<std::string> artifact_paths;
    if (policy == PolicyKind::Drl) {
        if (model_dir.empty())
            throw std::invalid_argument("drl evaluation needs a training bundle directory");
        const RunMeta meta = read_run_meta(join(model_dir, "run_meta.json"));
        norm = meta.normalizers;
        for (const auto& name : meta.artifacts) artifact_paths.push_back(join(model_dir, name));
    } else {
        norm = resolve_normalizers(cfg, seed);
    }

    EvalReport report;
    report.policy = policy;
    const int n_tx = static_cast<int>(cfg.grid.tx_gains_db.size());
    const int n_rx = static_cast<int>(cfg.grid.rx_gains_db.size());
    const int n_cells = n_tx * n_rx;
    if (n_cells == 0) throw std::invalid_argument("empty gain grid");
    report.cells.resize(static_cast<size_t>(n_cells));

    parallel_for_index(n_cells, [&](int ci) {
        const double tx_db = cfg.grid.tx_gains_db[static_cast<size_t>(ci / n_rx)];
        const double rx_db = cfg.grid.rx_gains_db[static_cast<size_t>(ci % n_rx)];
        report.cells[static_cast<size_t>(ci)] =
            eval_cell(cfg, policy, artifact_paths, norm, tx_db, rx_db,
                      derive_seed(seed, kCellStreamBase + static_cast<uint64_t>(ci)));
    });

    for (const auto& c : report.cells) {
        report.mean_power += c.mean_power;
        report.mean_pdr += c.pdr;
    }
    report.mean_power /= static_cast<double>(n_cells);
    report.mean_pdr /= static_cast<double>(n_cells);

    const uint64_t hash = config_hash(cfg);
    const std::string tag = policy_name(policy);
    {
        CsvWriter csv(join(out_dir, "eval_cells_" + tag + ".csv"),
                      metadata_comment(hash, seed, "policy=" + tag),
                      {"tx_gain_db", "rx_gain_db", "mean_power_mw", "pdr", "transmissions",
                       "successes"});
        for (const auto& c : report.cells)
            csv.row({fmt_double(c.tx_db), fmt_double(c.rx_db), fmt_double(c.mean_power),
                     fmt_double(c.pdr), std::to_string(c.transmissions),
                     std::to_string(c.successes)});
    }
    {
        CsvWriter csv(join(out_dir, "eval_trajectory_" + tag + ".csv"),
                      metadata_comment(hash, seed, "policy=" + tag),
                      {"tx_gain_db", "rx_gain_db", "slot", "agent", "power_mw", "sinr",
                       "transmitted", "success", "reward", "caused_interference_mw"});
        for (const auto& c : report.cells)
            for (const auto& r : c.records)
                csv.row({fmt_double(c.tx_db), fmt_double(c.rx_db), std::to_string(r.step),
                         std::to_string(r.agent), fmt_double(r.power), fmt_double(r.sinr),
                         r.transmitted ? "1" : "0", r.success ? "1" : "0", fmt_double(r.reward),
                         fmt_double(r.interference)});
    }
    {
        CsvWriter csv(join(out_dir, "eval_summary_" + tag + ".csv"),
                      metadata_comment(hash, seed, "policy=" + tag),
                      {"policy", "mean_power_mw", "mean_pdr", "cells"});
        csv.row({tag, fmt_double(report.mean_power), fmt_double(report.mean_pdr),
                 std::to_string(n_cells)});
    }
    return report;
}

std::vector<double> final_window_means(const TrainingResult& result, int n_agents,
                                       long n_steps, long window) {
    std::vector<double> means(static_cast<size_t>(n_agents), 0.0);
    const long from = std::max<long>(0, n_steps - window);
    for (int a = 0; a < n_agents; ++a)
        means[static_cast<size_t>(a)] = result.mean_reward(a, from, n_steps, n_agents);
    return means;
}

VarianceReport cmd_variance_study(const RunConfig& cfg, int n_runs, const std::string& out_dir,
                                  uint64_t seed) {
    if (n_runs < 3) throw std::invalid_argument("variance study needs n_runs >= 3");
    ensure_dir(out_dir);

    const int n_agents = cfg.scenario.n_pairs();
    VarianceReport report;
    report.n_runs = n_runs;
    report.n_agents = n_agents;
    report.finals.assign(2, std::vector<std::vector<double>>(
                                static_cast<size_t>(n_agents),
                                std::vector<double>(static_cast<size_t>(n_runs), 0.0)));

    // 2 * n_runs independent trainings; the same seed list is used in both
    // modes so the comparison is paired
    parallel_for_index(2 * n_runs, [&](int job) {
        const int mode = job / n_runs; // 0 = no aggregation, 1 = aggregation
        const int run = job % n_runs;
        RunConfig run_cfg = cfg;
        run_cfg.aggregation.enabled = mode == 1;
        const uint64_t run_seed =
            derive_seed(seed, kVarianceStreamBase + static_cast<uint64_t>(run));
        TrainedSystem sys = train_system(run_cfg, run_seed);
        const std::vector<double> finals =
            final_window_means(sys.result, n_agents, run_cfg.training.n_steps);
        for (int a = 0; a < n_agents; ++a)
            report.finals[static_cast<size_t>(mode)][static_cast<size_t>(a)]
                         [static_cast<size_t>(run)] = finals[static_cast<size_t>(a)];
    });

    report.variance.assign(2, std::vector<double>(static_cast<size_t>(n_agents), 0.0));
    for (int mode = 0; mode < 2; ++mode) {
        for (int a = 0; a < n_agents; ++a) {
            const auto& xs = report.finals[static_cast<size_t>(mode)][static_cast<size_t>(a)];
            double mean = 0.0;
            for (double x : xs) mean += x;
            mean /= static_cast<double>(xs.size());
            double var = 0.0;
            for (double x : xs) var += (x - mean) * (x - mean);
            report.variance[static_cast<size_t>(mode)][static_cast<size_t>(a)] =
                var / static_cast<double>(xs.size() - 1);
        }
    }

    const uint64_t hash = config_hash(cfg);
    {
        CsvWriter csv(join(out_dir, "variance_runs.csv"), metadata_comment(hash, seed),
                      {"aggregation", "run", "agent", "final_mean_reward"});
        for (int mode = 0; mode < 2; ++mode)
            for (int run = 0; run < n_runs; ++run)
                for (int a = 0; a < n_agents; ++a)
                    csv.row({mode ? "1" : "0", std::to_string(run), std::to_string(a),
                             fmt_double(report.finals[static_cast<size_t>(mode)]
                                                     [static_cast<size_t>(a)]
                                                     [static_cast<size_t>(run)])});
    }
    {
        CsvWriter csv(join(out_dir, "variance_summary.csv"), metadata_comment(hash, seed),
                      {"aggregation", "agent", "variance"});
        for (int mode = 0; mode < 2; ++mode)
            for (int a = 0; a < n_agents; ++a)
                csv.row({mode ? "1" : "0", std::to_string(a),
                         fmt_double(report.variance[static_cast<size_t>(mode)]
                                                   [static_cast<size_t>(a)])});
    }
    return report;
}

BenchReport cmd_bench(const std::string& model_path, long n_runs, const std::string& out_dir) {
    ensure_dir(out_dir);

    InferenceEngine engine = InferenceEngine::load(model_path);
    const LoadedModel model = load_model(model_path);
    const std::vector<double> input(static_cast<size_t>(engine.input_dim()), 0.5);

    BenchReport report;
    report.model_path = model_path;
    report.engine = bench_latency(engine, n_runs, input);
    report.naive = bench_naive(model.params, model.bounds, n_runs, input);

    CsvWriter csv(join(out_dir, "bench.csv"),
                  "timings are wall-clock and non-deterministic model=" + model_path,
                  {"format", "median_ns", "mean_ns", "p99_ns", "n_runs"});
    csv.row({"optimized", fmt_double(report.engine.median_ns), fmt_double(report.engine.mean_ns),
             fmt_double(report.engine.p99_ns), std::to_string(report.engine.n_runs)});
    csv.row({"naive", fmt_double(report.naive.median_ns), fmt_double(report.naive.mean_ns),
             fmt_double(report.naive.p99_ns), std::to_string(report.naive.n_runs)});
    return report;
}

} // namespace cdmarl
