#pragma once

#include <span>
#include <vector>

#include "cdmarl/ddpg.hpp"
#include "cdmarl/mlp.hpp"

namespace cdmarl {

enum class AggScope { ActorsOnly, ActorsAndCritics };
enum class AggWeighting { Uniform, RewardWeighted };

// Periodic parameter averaging across agents: a stabilizer for the otherwise
// high inter-run variance of independently trained actors.
struct AggregationPolicy {
    int period = 100; // steps between aggregations, >= 1
    AggScope scope = AggScope::ActorsOnly;
    AggWeighting weighting = AggWeighting::Uniform;
    int reward_window = 100; // window for reward-weighted means
};

// Elementwise convex combination of shape-congruent parameter sets. Weights
// must be non-negative and sum to 1 within 1e-9.
nn::MlpParams aggregate(std::span<const nn::MlpParams> params,
                        std::span<const double> weights);

// softmax over window-mean rewards; the weighting used when the policy asks
// for reward-weighted aggregation
std::vector<double> reward_weights(std::span<const double> window_means);

struct AggregationEvent {
    long step = 0;
    AggScope scope = AggScope::ActorsOnly;
    int participants = 0;
};

// When step_index is a multiple of the period: average the online actors of
// all agents (and critics when scoped), install the result as every agent's
// online network and snap the targets to it. Returns true when it fired.
// window_means feeds the reward weighting; pass an empty span for uniform.
bool apply_aggregation(std::vector<DdpgAgent>& agents, const AggregationPolicy& policy,
                       long step_index, std::span<const double> window_means = {});

} // namespace cdmarl
