#include "cdmarl/ddpg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cdmarl {

ReplayBuffer::ReplayBuffer(size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("replay capacity must be > 0");
    ring_.reserve(std::min<size_t>(capacity, 4096));
}

void ReplayBuffer::push(Experience e) {
    if (ring_.size() < capacity_) {
        ring_.push_back(std::move(e));
    } else {
        ring_[next_] = std::move(e); // overwrite oldest: next_ trails insertion order
    }
    next_ = (next_ + 1) % capacity_;
}

std::vector<const Experience*> ReplayBuffer::sample(size_t batch, Rng& rng) const {
    if (batch == 0 || batch > ring_.size())
        throw std::invalid_argument("sample batch must be in [1, size]");

    // Floyd's algorithm: uniform without replacement, O(batch^2) membership
    // checks which is cheap at the batch sizes used here.
    std::vector<size_t> chosen;
    chosen.reserve(batch);
    for (size_t i = ring_.size() - batch; i < ring_.size(); ++i) {
        const size_t j = static_cast<size_t>(rng.uniform_index(i + 1));
        if (std::find(chosen.begin(), chosen.end(), j) != chosen.end())
            chosen.push_back(i);
        else
            chosen.push_back(j);
    }
    std::vector<const Experience*> out;
    out.reserve(batch);
    for (size_t idx : chosen) out.push_back(&ring_[idx]);
    return out;
}

double discounted_return(std::span<const double> rewards, double gamma) {
    if (gamma < 0.0 || gamma >= 1.0)
        throw std::invalid_argument("discount factor must lie in [0, 1)");
    double acc = 0.0;
    double g = 1.0;
    for (double r : rewards) {
        acc += g * r;
        g *= gamma;
    }
    return acc;
}

DdpgAgent::DdpgAgent(int state_dim, double p_min, double p_max, const DdpgOptions& opt,
                     uint64_t seed)
    : state_dim_(state_dim),
      p_min_(p_min),
      p_max_(p_max),
      opt_(opt),
      replay_(opt.replay_capacity),
      rng_(derive_seed(seed, 2)),
      noise_sigma_(opt.noise_sigma_start) {
    if (state_dim < 1) throw std::invalid_argument("state_dim must be >= 1");
    if (!(p_min < p_max)) throw std::invalid_argument("p_min must be < p_max");
    if (opt.gamma < 0.0 || opt.gamma >= 1.0)
        throw std::invalid_argument("gamma must lie in [0, 1)");
    if (opt.tau < 0.0 || opt.tau > 1.0) throw std::invalid_argument("tau must lie in [0, 1]");

    Rng init(derive_seed(seed, 3));
    std::vector<int> actor_dims = {state_dim, opt.actor_hidden, 1};
    std::vector<nn::Act> actor_act = {nn::Act::Relu, nn::Act::Tanh};
    actor_ = nn::make_mlp(actor_dims, actor_act, init);
    actor_target_ = actor_;

    std::vector<int> critic_dims = {state_dim + 1};
    critic_dims.insert(critic_dims.end(), opt.critic_hidden.begin(), opt.critic_hidden.end());
    critic_dims.push_back(1);
    std::vector<nn::Act> critic_act(critic_dims.size() - 2, nn::Act::Relu);
    critic_act.push_back(nn::Act::Identity);
    critic_ = nn::make_mlp(critic_dims, critic_act, init);
    critic_target_ = critic_;

    actor_opt_ = nn::make_adam_state(actor_);
    critic_opt_ = nn::make_adam_state(critic_);
    actor_grads_ = nn::make_gradients(actor_);
    critic_grads_ = nn::make_gradients(critic_);
    critic_scratch_ = nn::make_gradients(critic_);
    sa_.assign(static_cast<size_t>(state_dim) + 1, 0.0);
}

double DdpgAgent::power_from_normalized(double u) const {
    const double clamped = std::clamp(u, -1.0, 1.0);
    return p_min_ + (clamped + 1.0) * 0.5 * (p_max_ - p_min_);
}

double DdpgAgent::act_normalized(std::span<const double> obs, bool explore) {
    nn::forward_trace(actor_, obs, actor_trace_);
    double u = actor_trace_.output()[0];
    if (explore) u += rng_.gaussian(0.0, noise_sigma_);
    return std::clamp(u, -1.0, 1.0);
}

ActionValue DdpgAgent::act(std::span<const double> obs, bool explore) {
    return ActionValue{power_from_normalized(act_normalized(obs, explore))};
}

void DdpgAgent::install_actor(const nn::MlpParams& p) {
    if (p.dims != actor_.dims) throw std::invalid_argument("actor shape mismatch on install");
    actor_ = p;
    actor_target_ = p;
}

void DdpgAgent::install_critic(const nn::MlpParams& p) {
    if (p.dims != critic_.dims) throw std::invalid_argument("critic shape mismatch on install");
    critic_ = p;
    critic_target_ = p;
}

TrainDiagnostics DdpgAgent::train_step() {
    const auto batch = replay_.sample(opt_.batch_size, rng_);
    return train_on(batch);
}

double DdpgAgent::train_critic_step() {
    const auto batch = replay_.sample(opt_.batch_size, rng_);
    return train_critic_on(batch);
}

double DdpgAgent::train_critic_on(std::span<const Experience* const> batch) {
    if (batch.empty()) throw std::invalid_argument("training batch is empty");
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    const size_t sdim = static_cast<size_t>(state_dim_);

    // critic regression toward r + gamma * (1 - terminal) * Q'(s', mu'(s'))
    nn::zero(critic_grads_);
    double critic_loss = 0.0;
    double upstream[1];
    for (const Experience* e : batch) {
        if (e->state.size() != sdim || e->next_state.size() != sdim)
            throw std::invalid_argument("experience state size mismatch");

        double target = e->reward;
        if (!e->terminal && opt_.gamma > 0.0) {
            nn::forward_trace(actor_target_, e->next_state, actor_trace_);
            std::copy(e->next_state.begin(), e->next_state.end(), sa_.begin());
            sa_[sdim] = std::clamp(actor_trace_.output()[0], -1.0, 1.0);
            nn::forward_trace(critic_target_, sa_, critic_trace_);
            target += opt_.gamma * critic_trace_.output()[0];
        }

        std::copy(e->state.begin(), e->state.end(), sa_.begin());
        sa_[sdim] = e->action;
        nn::forward_trace(critic_, sa_, critic_trace_);
        const double q = critic_trace_.output()[0];
        const double err = q - target;
        critic_loss += err * err * inv_b;
        upstream[0] = 2.0 * err * inv_b;
        nn::backward(critic_, critic_trace_, upstream, critic_grads_, true);
    }
    nn::adam_step(critic_, critic_grads_, critic_opt_, opt_.critic_lr, opt_.adam_beta1,
                  opt_.adam_beta2, opt_.adam_eps, opt_.critic_weight_decay);
    nn::soft_update(critic_target_, critic_, opt_.tau);
    if (!std::isfinite(critic_loss))
        throw std::runtime_error("training diverged: non-finite critic loss");
    return critic_loss;
}

TrainDiagnostics DdpgAgent::train_on(std::span<const Experience* const> batch) {
    if (batch.empty()) throw std::invalid_argument("training batch is empty");
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    const size_t sdim = static_cast<size_t>(state_dim_);

    nn::zero(critic_grads_);
    double critic_loss = 0.0;
    double upstream[1];
    for (const Experience* e : batch) {
        if (e->state.size() != sdim || e->next_state.size() != sdim)
            throw std::invalid_argument("experience state size mismatch");

        double target = e->reward;
        if (!e->terminal && opt_.gamma > 0.0) {
            nn::forward_trace(actor_target_, e->next_state, actor_trace_);
            std::copy(e->next_state.begin(), e->next_state.end(), sa_.begin());
            sa_[sdim] = std::clamp(actor_trace_.output()[0], -1.0, 1.0);
            nn::forward_trace(critic_target_, sa_, critic_trace_);
            target += opt_.gamma * critic_trace_.output()[0];
        }

        std::copy(e->state.begin(), e->state.end(), sa_.begin());
        sa_[sdim] = e->action;
        nn::forward_trace(critic_, sa_, critic_trace_);
        const double q = critic_trace_.output()[0];
        const double err = q - target;
        critic_loss += err * err * inv_b;
        upstream[0] = 2.0 * err * inv_b;
        nn::backward(critic_, critic_trace_, upstream, critic_grads_, true);
    }
    nn::adam_step(critic_, critic_grads_, critic_opt_, opt_.critic_lr, opt_.adam_beta1,
                  opt_.adam_beta2, opt_.adam_eps, opt_.critic_weight_decay);

    // actor ascends Q(s, mu(s)) through the critic's action input
    nn::zero(actor_grads_);
    double actor_objective = 0.0;
    for (const Experience* e : batch) {
        nn::forward_trace(actor_, e->state, actor_trace_);
        const double u = actor_trace_.output()[0];
        std::copy(e->state.begin(), e->state.end(), sa_.begin());
        sa_[sdim] = u;
        nn::forward_trace(critic_, sa_, critic_trace_);
        actor_objective += critic_trace_.output()[0] * inv_b;

        upstream[0] = 1.0;
        nn::backward(critic_, critic_trace_, upstream, critic_scratch_, false);
        const double dq_da = critic_scratch_.input[sdim];

        upstream[0] = -dq_da * inv_b; // minimize -Q
        nn::backward(actor_, actor_trace_, upstream, actor_grads_, true);
    }
    nn::adam_step(actor_, actor_grads_, actor_opt_, opt_.actor_lr, opt_.adam_beta1,
                  opt_.adam_beta2, opt_.adam_eps);

    nn::soft_update(actor_target_, actor_, opt_.tau);
    nn::soft_update(critic_target_, critic_, opt_.tau);

    if (!std::isfinite(critic_loss) || !std::isfinite(actor_objective))
        throw std::runtime_error("training diverged: non-finite loss");
    return TrainDiagnostics{critic_loss, actor_objective};
}

} // namespace cdmarl
