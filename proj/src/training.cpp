#include "cdmarl/training.hpp"

#include <algorithm>
#include <stdexcept>

namespace cdmarl {

double TrainingResult::mean_reward(int agent, long from, long to, int n_agents) const {
    if (from >= to) throw std::invalid_argument("empty reward range");
    double acc = 0.0;
    long count = 0;
    for (long s = from; s < to; ++s) {
        const size_t idx = static_cast<size_t>(s) * static_cast<size_t>(n_agents) +
                           static_cast<size_t>(agent);
        if (idx >= records.size()) break;
        acc += records[idx].reward;
        ++count;
    }
    if (count == 0) throw std::out_of_range("reward range outside recorded steps");
    return acc / static_cast<double>(count);
}

TrainingDriver::TrainingDriver(CdmaEnv& env, std::vector<DdpgAgent>& agents,
                               const TrainingOptions& opt,
                               std::optional<AggregationPolicy> aggregation, uint64_t seed)
    : env_(env), agents_(agents), opt_(opt), aggregation_(aggregation) {
    if (opt.n_steps < 1) throw std::invalid_argument("n_steps must be >= 1");
    if (opt.episode_slots < 1) throw std::invalid_argument("episode_slots must be >= 1");
    if (agents_.size() != static_cast<size_t>(env_.n_agents()))
        throw std::invalid_argument("one agent per pair required");

    env_.reset(seed);
    obs_vecs_.resize(agents_.size());
    for (size_t i = 0; i < agents_.size(); ++i)
        obs_vecs_[i] = env_.observation_vector(env_.observation(static_cast<int>(i)));
    pending_u_.assign(agents_.size(), 0.0);
    actions_.assign(agents_.size(), ActionValue{});
    recent_rewards_.assign(agents_.size(), {});
    result_.records.reserve(static_cast<size_t>(opt.n_steps) * agents_.size());
}

std::vector<double> TrainingDriver::reward_window_means(int window) const {
    std::vector<double> means(agents_.size(), 0.0);
    for (size_t i = 0; i < agents_.size(); ++i) {
        const auto& ring = recent_rewards_[i];
        const size_t n = std::min<size_t>(ring.size(), static_cast<size_t>(std::max(window, 1)));
        if (n == 0) continue;
        double acc = 0.0;
        for (size_t k = ring.size() - n; k < ring.size(); ++k) acc += ring[k];
        means[i] = acc / static_cast<double>(n);
    }
    return means;
}

long TrainingDriver::step_once() {
    if (done()) throw std::logic_error("training already finished");
    const long step = ++step_;
    const auto& dopt = agents_[0].options();

    const double frac = std::min(1.0, static_cast<double>(step) /
                                          static_cast<double>(opt_.n_steps));
    const double sigma =
        dopt.noise_sigma_start + (dopt.noise_sigma_end - dopt.noise_sigma_start) * frac;

    for (size_t i = 0; i < agents_.size(); ++i) {
        agents_[i].set_noise_sigma(sigma);
        pending_u_[i] = agents_[i].act_normalized(obs_vecs_[i], true);
        actions_[i].power = agents_[i].power_from_normalized(pending_u_[i]);
    }

    const StepOutcome out = env_.step(actions_);

    for (size_t i = 0; i < agents_.size(); ++i) {
        const auto& a = out.agents[i];
        std::vector<double> next_vec = env_.observation_vector(a.next_obs);
        if (a.transmitted) {
            agents_[i].observe(Experience{obs_vecs_[i], pending_u_[i], a.reward,
                                          next_vec, false});
        }
        result_.records.push_back(StepRecord{step, static_cast<int>(i), a.power, a.sinr,
                                             a.transmitted, a.success, a.reward,
                                             a.next_obs.caused_interference});
        auto& ring = recent_rewards_[i];
        ring.push_back(a.reward);
        const size_t keep = aggregation_ ? static_cast<size_t>(std::max(
                                               aggregation_->reward_window, 1))
                                         : 1;
        if (ring.size() > keep) ring.erase(ring.begin(), ring.end() - static_cast<long>(keep));
        obs_vecs_[i] = std::move(next_vec);
    }

    if (static_cast<size_t>(step) > dopt.warmup_steps) {
        const bool actor_live =
            static_cast<size_t>(step) > dopt.warmup_steps + dopt.actor_delay_steps;
        for (auto& agent : agents_) {
            if (!agent.ready_to_train()) continue;
            if (actor_live)
                agent.train_step();
            else
                agent.train_critic_step();
        }
    }

    if (aggregation_) {
        std::vector<double> means;
        if (aggregation_->weighting == AggWeighting::RewardWeighted)
            means = reward_window_means(aggregation_->reward_window);
        if (apply_aggregation(agents_, *aggregation_, step, means))
            result_.aggregation_events.push_back(AggregationEvent{
                step, aggregation_->scope, static_cast<int>(agents_.size())});
    }

    if (step % opt_.episode_slots == 0 && step < opt_.n_steps) {
        env_.begin_episode();
        for (size_t i = 0; i < agents_.size(); ++i)
            obs_vecs_[i] = env_.observation_vector(env_.observation(static_cast<int>(i)));
    }
    return step;
}

TrainingResult run_training(CdmaEnv& env, std::vector<DdpgAgent>& agents,
                            const TrainingOptions& opt,
                            std::optional<AggregationPolicy> aggregation, uint64_t seed) {
    TrainingDriver driver(env, agents, opt, aggregation, seed);
    try {
        while (!driver.done()) driver.step_once();
    } catch (const std::runtime_error& e) {
        // divergence: halt and hand back the partial trajectory
        TrainingResult partial = driver.take_result();
        partial.divergence_error = e.what();
        return partial;
    }
    return driver.take_result();
}

} // namespace cdmarl
