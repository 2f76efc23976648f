#include "cdmarl/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cdmarl {

nn::MlpParams aggregate(std::span<const nn::MlpParams> params,
                        std::span<const double> weights) {
    if (params.empty()) throw std::invalid_argument("nothing to aggregate");
    if (params.size() != weights.size())
        throw std::invalid_argument("one weight per parameter set required");

    double total = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw std::invalid_argument("aggregation weights must be non-negative");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument("aggregation weights must sum to 1");

    const auto& first = params[0];
    for (const auto& p : params)
        if (p.dims != first.dims || p.act != first.act)
            throw std::invalid_argument("aggregation shape mismatch");

    nn::MlpParams out = nn::make_zero_mlp(first.dims, first.act);
    for (size_t k = 0; k < params.size(); ++k) {
        const double w = weights[k];
        for (size_t l = 0; l < out.weights.size(); ++l) {
            for (size_t i = 0; i < out.weights[l].size(); ++i)
                out.weights[l][i] += w * params[k].weights[l][i];
            for (size_t i = 0; i < out.biases[l].size(); ++i)
                out.biases[l][i] += w * params[k].biases[l][i];
        }
    }
    return out;
}

std::vector<double> reward_weights(std::span<const double> window_means) {
    if (window_means.empty()) throw std::invalid_argument("no reward means given");
    const double top = *std::max_element(window_means.begin(), window_means.end());
    std::vector<double> w(window_means.size());
    double total = 0.0;
    for (size_t i = 0; i < w.size(); ++i) {
        w[i] = std::exp(window_means[i] - top);
        total += w[i];
    }
    for (auto& x : w) x /= total;
    return w;
}

bool apply_aggregation(std::vector<DdpgAgent>& agents, const AggregationPolicy& policy,
                       long step_index, std::span<const double> window_means) {
    if (policy.period < 1) throw std::invalid_argument("aggregation period must be >= 1");
    if (step_index < 1) throw std::invalid_argument("step_index must be >= 1");
    if (step_index % policy.period != 0) return false;
    if (agents.size() < 2) return false;

    std::vector<double> weights;
    if (policy.weighting == AggWeighting::RewardWeighted && !window_means.empty()) {
        if (window_means.size() != agents.size())
            throw std::invalid_argument("one window mean per agent required");
        weights = reward_weights(window_means);
    } else {
        weights.assign(agents.size(), 1.0 / static_cast<double>(agents.size()));
    }

    std::vector<nn::MlpParams> actors;
    actors.reserve(agents.size());
    for (const auto& a : agents) actors.push_back(a.actor());
    const nn::MlpParams actor_avg = aggregate(actors, weights);
    for (auto& a : agents) a.install_actor(actor_avg);

    if (policy.scope == AggScope::ActorsAndCritics) {
        std::vector<nn::MlpParams> critics;
        critics.reserve(agents.size());
        for (const auto& a : agents) critics.push_back(a.critic());
        const nn::MlpParams critic_avg = aggregate(critics, weights);
        for (auto& a : agents) a.install_critic(critic_avg);
    }
    return true;
}

} // namespace cdmarl
