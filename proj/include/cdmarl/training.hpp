#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cdmarl/aggregate.hpp"
#include "cdmarl/ddpg.hpp"
#include "cdmarl/env.hpp"

namespace cdmarl {

struct TrainingOptions {
    long n_steps = 5000;
    int episode_slots = 100; // buffers refreshed every this many steps
};

struct TrainingResult {
    std::vector<StepRecord> records; // n_steps * n_agents rows, step-major
    std::vector<AggregationEvent> aggregation_events;
    // set when the run halted on a divergence; records hold the partial
    // trajectory up to the failing step
    std::string divergence_error;

    bool diverged() const { return !divergence_error.empty(); }

    // mean per-step reward of one agent over [from, to)
    double mean_reward(int agent, long from, long to, int n_agents) const;
};

// Drives one multi-agent training run step by step so callers can interleave
// work between steps (the lockstep cross-run aggregation mode needs this).
class TrainingDriver {
  public:
    TrainingDriver(CdmaEnv& env, std::vector<DdpgAgent>& agents, const TrainingOptions& opt,
                   std::optional<AggregationPolicy> aggregation, uint64_t seed);

    // one environment slot + one learning update per agent; returns the step
    // index just executed (1-based)
    long step_once();

    // window means used for reward-weighted aggregation
    std::vector<double> reward_window_means(int window) const;

    long current_step() const { return step_; }
    bool done() const { return step_ >= opt_.n_steps; }
    std::vector<DdpgAgent>& agents() { return agents_; }
    TrainingResult take_result() { return std::move(result_); }
    const TrainingResult& result() const { return result_; }

    // exposed so lockstep replicas can aggregate externally and skip the
    // driver's own aggregation
    void disable_internal_aggregation() { aggregation_.reset(); }

  private:
    CdmaEnv& env_;
    std::vector<DdpgAgent>& agents_;
    TrainingOptions opt_;
    std::optional<AggregationPolicy> aggregation_;
    long step_ = 0;
    std::vector<std::vector<double>> obs_vecs_;
    std::vector<double> pending_u_;
    std::vector<ActionValue> actions_;
    std::vector<std::vector<double>> recent_rewards_; // per agent ring for weighting
    TrainingResult result_;
};

// The canonical loop: observe, act with exploration noise, step the
// environment, store experiences for transmitting agents, train each agent
// past warmup, and aggregate on schedule.
TrainingResult run_training(CdmaEnv& env, std::vector<DdpgAgent>& agents,
                            const TrainingOptions& opt,
                            std::optional<AggregationPolicy> aggregation, uint64_t seed);

} // namespace cdmarl
