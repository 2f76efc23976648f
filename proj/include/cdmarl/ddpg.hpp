#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cdmarl/env.hpp"
#include "cdmarl/mlp.hpp"
#include "cdmarl/rng.hpp"

namespace cdmarl {

// One replay tuple. The action is stored normalized in [-1, 1]; the mapping
// to mW lives in the agent so the learner never sees raw powers.
struct Experience {
    std::vector<double> state;
    double action = 0.0;
    double reward = 0.0;
    std::vector<double> next_state;
    bool terminal = false;
};

// Fixed-capacity FIFO ring with uniform batch sampling (without replacement).
class ReplayBuffer {
  public:
    explicit ReplayBuffer(size_t capacity);

    void push(Experience e);
    size_t size() const { return ring_.size(); }
    size_t capacity() const { return capacity_; }
    const Experience& at(size_t i) const { return ring_[i]; }

    // batch distinct entries, uniform over the buffer; batch must be <= size
    std::vector<const Experience*> sample(size_t batch, Rng& rng) const;

  private:
    size_t capacity_;
    std::vector<Experience> ring_;
    size_t next_ = 0;
};

// Finite-horizon discounted return: sum_i gamma^i * rewards[i], gamma in [0,1).
double discounted_return(std::span<const double> rewards, double gamma);

struct DdpgOptions {
    double gamma = 0.99;
    double tau = 0.005;
    size_t batch_size = 64;
    size_t replay_capacity = 100000;
    size_t warmup_steps = 500;
    // critic-only updates for this many further steps: a freshly initialized
    // critic sweeps its output toward the reward scale and transiently slopes
    // in every input including the action, which drags the actor to a power
    // extreme before any real gradient exists
    size_t actor_delay_steps = 1000;
    double actor_lr = 1e-4;
    double critic_lr = 1e-3;
    double critic_weight_decay = 1e-2; // limits extrapolated action slopes
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double noise_sigma_start = 0.3;
    double noise_sigma_end = 0.05;
    int actor_hidden = 10;
    std::vector<int> critic_hidden = {16, 32, 32, 256};
};

struct TrainDiagnostics {
    double critic_loss = 0.0;
    double actor_objective = 0.0; // mean Q(s, mu(s)) over the batch
};

// Per-pair DDPG learner: actor mu(s) with tanh head mapped onto the power
// range, critic Q(s, a) over the state extended with the normalized action,
// slow target copies of both, and a private replay buffer.
class DdpgAgent {
  public:
    DdpgAgent(int state_dim, double p_min, double p_max, const DdpgOptions& opt, uint64_t seed);

    // normalized action u in [-1, 1]; explore adds clamped Gaussian noise
    double act_normalized(std::span<const double> obs, bool explore);
    ActionValue act(std::span<const double> obs, bool explore);
    double power_from_normalized(double u) const;

    void observe(Experience e) { replay_.push(std::move(e)); }
    bool ready_to_train() const { return replay_.size() >= opt_.batch_size; }

    // sample a batch from the private replay and run one update
    TrainDiagnostics train_step();
    // one update from an explicit batch
    TrainDiagnostics train_on(std::span<const Experience* const> batch);
    // critic-and-target-only update used while the actor is still held back
    double train_critic_step();
    double train_critic_on(std::span<const Experience* const> batch);

    void set_noise_sigma(double sigma) { noise_sigma_ = sigma; }
    double noise_sigma() const { return noise_sigma_; }

    const nn::MlpParams& actor() const { return actor_; }
    const nn::MlpParams& critic() const { return critic_; }
    const nn::MlpParams& actor_target() const { return actor_target_; }
    const nn::MlpParams& critic_target() const { return critic_target_; }

    // Replace the online network and snap its target to the same values;
    // used by model aggregation.
    void install_actor(const nn::MlpParams& p);
    void install_critic(const nn::MlpParams& p);

    int state_dim() const { return state_dim_; }
    double p_min() const { return p_min_; }
    double p_max() const { return p_max_; }
    const DdpgOptions& options() const { return opt_; }
    const ReplayBuffer& replay() const { return replay_; }

  private:
    int state_dim_;
    double p_min_, p_max_;
    DdpgOptions opt_;
    nn::MlpParams actor_, actor_target_, critic_, critic_target_;
    nn::AdamState actor_opt_, critic_opt_;
    ReplayBuffer replay_;
    Rng rng_;
    double noise_sigma_;

    // reused workspaces
    nn::ForwardTrace actor_trace_, critic_trace_;
    nn::Gradients actor_grads_, critic_grads_, critic_scratch_;
    std::vector<double> sa_;
};

} // namespace cdmarl
