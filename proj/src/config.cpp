#include "cdmarl/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace cdmarl {

using nlohmann::json;

namespace {

json scenario_to_json_obj(const NetworkScenario& s) {
    json j;
    json pos = json::array();
    for (const auto& p : s.node_positions) pos.push_back(json::array({p.x, p.y}));
    j["positions"] = pos;
    json pairs = json::array();
    for (const auto& p : s.pairs) pairs.push_back(json::array({p.tx, p.rx}));
    j["pairs"] = pairs;
    j["path_loss_exp"] = s.path_loss_exp;
    j["spreading_gain"] = s.spreading_gain;
    j["noise_power_mw"] = s.noise_power;
    j["sinr_threshold"] = s.sinr_threshold;
    j["p_min_mw"] = s.p_min;
    j["p_max_mw"] = s.p_max;
    j["tx_gain_db"] = s.tx_gain_db;
    j["rx_gain_db"] = s.rx_gain_db;
    return j;
}

NetworkScenario scenario_from_json_obj(const json& j) {
    NetworkScenario s;
    for (const auto& p : j.at("positions"))
        s.node_positions.push_back(Vec2{p.at(0).get<double>(), p.at(1).get<double>()});
    for (const auto& p : j.at("pairs"))
        s.pairs.push_back(LinkPair{p.at(0).get<int>(), p.at(1).get<int>()});
    s.path_loss_exp = j.at("path_loss_exp").get<double>();
    s.spreading_gain = j.at("spreading_gain").get<int>();
    s.noise_power = j.at("noise_power_mw").get<double>();
    s.sinr_threshold = j.at("sinr_threshold").get<double>();
    s.p_min = j.value("p_min_mw", 0.1);
    s.p_max = j.value("p_max_mw", 5.0);
    s.tx_gain_db = j.value("tx_gain_db", std::vector<double>{});
    s.rx_gain_db = j.value("rx_gain_db", std::vector<double>{});
    s.validate();
    return s;
}

std::string scope_name(AggScope s) {
    return s == AggScope::ActorsAndCritics ? "actors_and_critics" : "actors";
}

AggScope scope_from_name(const std::string& n) {
    if (n == "actors") return AggScope::ActorsOnly;
    if (n == "actors_and_critics") return AggScope::ActorsAndCritics;
    throw std::invalid_argument("unknown aggregation scope '" + n + "'");
}

std::string weighting_name(AggWeighting w) {
    return w == AggWeighting::RewardWeighted ? "reward_weighted" : "uniform";
}

AggWeighting weighting_from_name(const std::string& n) {
    if (n == "uniform") return AggWeighting::Uniform;
    if (n == "reward_weighted") return AggWeighting::RewardWeighted;
    throw std::invalid_argument("unknown aggregation weighting '" + n + "'");
}

json config_to_json_obj(const RunConfig& cfg) {
    json j;
    j["scenario"] = scenario_to_json_obj(cfg.scenario);

    json traffic;
    traffic["mode"] = cfg.traffic.mode == TrafficMode::Backlogged ? "backlogged" : "poisson";
    traffic["rate"] = cfg.traffic.rate;
    traffic["initial_buffer"] = cfg.traffic.initial_buffer;
    traffic["retransmit_failed"] = cfg.traffic.retransmit_failed;
    j["traffic"] = traffic;

    json norm;
    if (cfg.normalizers.sinr_divisor) norm["sinr_divisor"] = *cfg.normalizers.sinr_divisor;
    if (cfg.normalizers.interference_divisor)
        norm["interference_divisor"] = *cfg.normalizers.interference_divisor;
    norm["calibration_slots"] = cfg.normalizers.calibration_slots;
    j["normalizers"] = norm;

    json training;
    training["steps"] = cfg.training.n_steps;
    training["episode_slots"] = cfg.training.episode_slots;
    j["training"] = training;

    json ddpg;
    ddpg["gamma"] = cfg.ddpg.gamma;
    ddpg["tau"] = cfg.ddpg.tau;
    ddpg["batch_size"] = cfg.ddpg.batch_size;
    ddpg["replay_capacity"] = cfg.ddpg.replay_capacity;
    ddpg["warmup_steps"] = cfg.ddpg.warmup_steps;
    ddpg["actor_delay_steps"] = cfg.ddpg.actor_delay_steps;
    ddpg["actor_lr"] = cfg.ddpg.actor_lr;
    ddpg["critic_lr"] = cfg.ddpg.critic_lr;
    ddpg["critic_weight_decay"] = cfg.ddpg.critic_weight_decay;
    ddpg["adam_beta1"] = cfg.ddpg.adam_beta1;
    ddpg["adam_beta2"] = cfg.ddpg.adam_beta2;
    ddpg["adam_eps"] = cfg.ddpg.adam_eps;
    ddpg["noise_sigma_start"] = cfg.ddpg.noise_sigma_start;
    ddpg["noise_sigma_end"] = cfg.ddpg.noise_sigma_end;
    ddpg["actor_hidden"] = cfg.ddpg.actor_hidden;
    ddpg["critic_hidden"] = cfg.ddpg.critic_hidden;
    j["ddpg"] = ddpg;

    json agg;
    agg["enabled"] = cfg.aggregation.enabled;
    agg["period"] = cfg.aggregation.policy.period;
    agg["scope"] = scope_name(cfg.aggregation.policy.scope);
    agg["weighting"] = weighting_name(cfg.aggregation.policy.weighting);
    agg["reward_window"] = cfg.aggregation.policy.reward_window;
    agg["mode"] = cfg.aggregation.mode == AggregationMode::Runs ? "runs" : "agents";
    agg["run_replicas"] = cfg.aggregation.run_replicas;
    j["aggregation"] = agg;

    json grid;
    grid["tx_gains_db"] = cfg.grid.tx_gains_db;
    grid["rx_gains_db"] = cfg.grid.rx_gains_db;
    grid["packets_per_experiment"] = cfg.grid.packets_per_experiment;
    grid["first_packet_power_mw"] = cfg.grid.first_packet_power;
    j["grid"] = grid;

    j["export_precision"] = cfg.export_precision == Precision::F64 ? "f64" : "f32";
    return j;
}

RunConfig config_from_json_obj(const json& j) {
    RunConfig cfg;
    cfg.scenario = scenario_from_json_obj(j.at("scenario"));

    if (j.contains("traffic")) {
        const auto& t = j.at("traffic");
        const std::string mode = t.value("mode", "backlogged");
        if (mode == "backlogged")
            cfg.traffic.mode = TrafficMode::Backlogged;
        else if (mode == "poisson")
            cfg.traffic.mode = TrafficMode::Poisson;
        else
            throw std::invalid_argument("unknown traffic mode '" + mode + "'");
        cfg.traffic.rate = t.value("rate", 0.0);
        cfg.traffic.initial_buffer = t.value("initial_buffer", 10);
        cfg.traffic.retransmit_failed = t.value("retransmit_failed", false);
    }

    if (j.contains("normalizers")) {
        const auto& n = j.at("normalizers");
        if (n.contains("sinr_divisor"))
            cfg.normalizers.sinr_divisor = n.at("sinr_divisor").get<double>();
        if (n.contains("interference_divisor"))
            cfg.normalizers.interference_divisor = n.at("interference_divisor").get<double>();
        cfg.normalizers.calibration_slots = n.value("calibration_slots", 1000L);
    }

    if (j.contains("training")) {
        const auto& t = j.at("training");
        cfg.training.n_steps = t.value("steps", 5000L);
        cfg.training.episode_slots = t.value("episode_slots", 100);
    }

    if (j.contains("ddpg")) {
        const auto& d = j.at("ddpg");
        cfg.ddpg.gamma = d.value("gamma", cfg.ddpg.gamma);
        cfg.ddpg.tau = d.value("tau", cfg.ddpg.tau);
        cfg.ddpg.batch_size = d.value("batch_size", cfg.ddpg.batch_size);
        cfg.ddpg.replay_capacity = d.value("replay_capacity", cfg.ddpg.replay_capacity);
        cfg.ddpg.warmup_steps = d.value("warmup_steps", cfg.ddpg.warmup_steps);
        cfg.ddpg.actor_delay_steps = d.value("actor_delay_steps", cfg.ddpg.actor_delay_steps);
        cfg.ddpg.actor_lr = d.value("actor_lr", cfg.ddpg.actor_lr);
        cfg.ddpg.critic_lr = d.value("critic_lr", cfg.ddpg.critic_lr);
        cfg.ddpg.critic_weight_decay = d.value("critic_weight_decay", cfg.ddpg.critic_weight_decay);
        cfg.ddpg.adam_beta1 = d.value("adam_beta1", cfg.ddpg.adam_beta1);
        cfg.ddpg.adam_beta2 = d.value("adam_beta2", cfg.ddpg.adam_beta2);
        cfg.ddpg.adam_eps = d.value("adam_eps", cfg.ddpg.adam_eps);
        cfg.ddpg.noise_sigma_start = d.value("noise_sigma_start", cfg.ddpg.noise_sigma_start);
        cfg.ddpg.noise_sigma_end = d.value("noise_sigma_end", cfg.ddpg.noise_sigma_end);
        cfg.ddpg.actor_hidden = d.value("actor_hidden", cfg.ddpg.actor_hidden);
        cfg.ddpg.critic_hidden = d.value("critic_hidden", cfg.ddpg.critic_hidden);
    }

    if (j.contains("aggregation")) {
        const auto& a = j.at("aggregation");
        cfg.aggregation.enabled = a.value("enabled", true);
        cfg.aggregation.policy.period = a.value("period", 100);
        cfg.aggregation.policy.scope = scope_from_name(a.value("scope", "actors"));
        cfg.aggregation.policy.weighting =
            weighting_from_name(a.value("weighting", "uniform"));
        cfg.aggregation.policy.reward_window = a.value("reward_window", 100);
        const std::string mode = a.value("mode", "agents");
        if (mode == "agents")
            cfg.aggregation.mode = AggregationMode::Agents;
        else if (mode == "runs")
            cfg.aggregation.mode = AggregationMode::Runs;
        else
            throw std::invalid_argument("unknown aggregation mode '" + mode + "'");
        cfg.aggregation.run_replicas = a.value("run_replicas", 3);
    }

    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        cfg.grid.tx_gains_db = g.value("tx_gains_db", cfg.grid.tx_gains_db);
        cfg.grid.rx_gains_db = g.value("rx_gains_db", cfg.grid.rx_gains_db);
        cfg.grid.packets_per_experiment =
            g.value("packets_per_experiment", cfg.grid.packets_per_experiment);
        cfg.grid.first_packet_power = g.value("first_packet_power_mw", -1.0);
    }

    const std::string prec = j.value("export_precision", "f32");
    if (prec == "f32")
        cfg.export_precision = Precision::F32;
    else if (prec == "f64")
        cfg.export_precision = Precision::F64;
    else
        throw std::invalid_argument("unknown export precision '" + prec + "'");

    return cfg;
}

} // namespace

RunConfig default_config() {
    RunConfig cfg;

    // Three pairs in a row: transmitters along y = 0 every 10 m, each
    // receiver 4 m above its transmitter. The middle pair sees interference
    // from both sides.
    NetworkScenario& s = cfg.scenario;
    s.node_positions = {{0.0, 0.0}, {0.0, 4.0},  {10.0, 0.0},
                        {10.0, 4.0}, {20.0, 0.0}, {20.0, 4.0}};
    s.pairs = {{0, 1}, {2, 3}, {4, 5}};
    s.path_loss_exp = 2.2;
    s.spreading_gain = 16;
    s.noise_power = 0.004;
    s.sinr_threshold = 40.0;
    s.p_min = 0.1;
    s.p_max = 5.0;
    s.tx_gain_db.assign(6, 0.0);
    s.rx_gain_db.assign(6, 0.0);

    cfg.traffic.mode = TrafficMode::Backlogged;
    cfg.traffic.initial_buffer = 10;

    // pinned scaling constants for this scenario: success rewards saturate at
    // the threshold and failure penalties stay proportional to caused
    // interference over the whole power range
    cfg.normalizers.sinr_divisor = 40.0;
    cfg.normalizers.interference_divisor = 0.15;
    cfg.normalizers.calibration_slots = 1000;

    cfg.training.n_steps = 5000;
    cfg.training.episode_slots = 100;

    cfg.aggregation.enabled = true;
    cfg.aggregation.policy.period = 100;

    return cfg;
}

RunConfig smoke_config() {
    RunConfig cfg;
    NetworkScenario& s = cfg.scenario;
    s.node_positions = {{0.0, 0.0}, {0.0, 2.0}};
    s.pairs = {{0, 1}};
    s.path_loss_exp = 2.0;
    s.spreading_gain = 16;
    s.noise_power = 0.01;
    s.sinr_threshold = 10.0;
    s.p_min = 0.1;
    s.p_max = 5.0;
    s.tx_gain_db.assign(2, 0.0);
    s.rx_gain_db.assign(2, 0.0);

    cfg.traffic.mode = TrafficMode::Backlogged;
    cfg.traffic.initial_buffer = 10;

    cfg.normalizers.calibration_slots = 100;
    cfg.training.n_steps = 200;
    cfg.training.episode_slots = 50;
    cfg.ddpg.warmup_steps = 50;
    cfg.aggregation.enabled = false;
    cfg.grid.tx_gains_db = {0.0};
    cfg.grid.rx_gains_db = {0.0};
    cfg.grid.packets_per_experiment = 50;
    return cfg;
}

std::string config_to_json(const RunConfig& cfg) {
    return config_to_json_obj(cfg).dump(2);
}

RunConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config parse error: ") + e.what());
    }
    return config_from_json_obj(j);
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config file " + path);
    std::stringstream buf;
    buf << f.rdbuf();
    try {
        return config_from_json(buf.str());
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

NetworkScenario scenario_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("scenario parse error: ") + e.what());
    }
    return scenario_from_json_obj(j);
}

uint64_t config_hash(const RunConfig& cfg) {
    const std::string canonical = config_to_json_obj(cfg).dump();
    return fnv1a64({reinterpret_cast<const uint8_t*>(canonical.data()), canonical.size()});
}

} // namespace cdmarl
