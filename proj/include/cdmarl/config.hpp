#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cdmarl/aggregate.hpp"
#include "cdmarl/ddpg.hpp"
#include "cdmarl/env.hpp"
#include "cdmarl/model_io.hpp"
#include "cdmarl/scenario.hpp"
#include "cdmarl/training.hpp"

namespace cdmarl {

enum class AggregationMode { Agents, Runs };

struct AggregationConfig {
    bool enabled = true;
    AggregationPolicy policy;
    AggregationMode mode = AggregationMode::Agents;
    int run_replicas = 3; // lockstep replicas for the across-runs mode
};

struct NormalizerConfig {
    // when both divisors are set they are used as-is; otherwise they are
    // calibrated by running random powers for calibration_slots
    std::optional<double> sinr_divisor;
    std::optional<double> interference_divisor;
    long calibration_slots = 1000;
};

struct GridConfig {
    std::vector<double> tx_gains_db = {-6.0, -3.0, 0.0, 3.0};
    std::vector<double> rx_gains_db = {-6.0, -3.0, 0.0, 3.0};
    long packets_per_experiment = 1000;
    double first_packet_power = -1.0; // mW; negative means "use p_max"
};

struct RunConfig {
    NetworkScenario scenario;
    TrafficModel traffic;
    NormalizerConfig normalizers;
    TrainingOptions training;
    DdpgOptions ddpg;
    AggregationConfig aggregation;
    GridConfig grid;
    Precision export_precision = Precision::F32;

    double first_packet_power() const {
        return grid.first_packet_power > 0.0 ? grid.first_packet_power : scenario.p_max;
    }
};

// The stock 3-pair instance: three transmitter/receiver pairs in a row,
// bursty traffic, and a SINR target that is feasible but leaves no headroom
// for sloppy power control.
RunConfig default_config();

// A one-pair, short-horizon config for smoke tests.
RunConfig smoke_config();

std::string config_to_json(const RunConfig& cfg); // canonical (sorted keys)
RunConfig config_from_json(const std::string& text);
RunConfig load_config_file(const std::string& path); // parse errors carry byte offsets

NetworkScenario scenario_from_json(const std::string& text);

uint64_t config_hash(const RunConfig& cfg); // FNV-1a over the canonical form

} // namespace cdmarl
