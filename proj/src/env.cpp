#include "cdmarl/env.hpp"

#include <algorithm>
#include <stdexcept>

namespace cdmarl {

CdmaEnv::CdmaEnv(NetworkScenario scn, TrafficModel traffic, Normalizers norm)
    : scn_(std::move(scn)), traffic_(traffic), norm_(norm), rng_(0) {
    scn_.validate();
    if (!(norm_.sinr_divisor > 0.0) || !(norm_.interference_divisor > 0.0))
        throw std::invalid_argument("normalizer divisors must be > 0");
    if (traffic_.rate < 0.0) throw std::invalid_argument("traffic rate must be >= 0");
    if (traffic_.initial_buffer < 0)
        throw std::invalid_argument("initial_buffer must be >= 0");
    diameter_ = scn_.diameter();
}

std::vector<Observation> CdmaEnv::reset(uint64_t seed) {
    rng_ = Rng(derive_seed(seed, 0));
    slot_ = 0;
    obs_.assign(static_cast<size_t>(scn_.n_pairs()), Observation{});

    for (int i = 0; i < scn_.n_pairs(); ++i) {
        auto& o = obs_[static_cast<size_t>(i)];
        const int own_rx = scn_.pairs[static_cast<size_t>(i)].rx;
        const int tx = scn_.pairs[static_cast<size_t>(i)].tx;
        o.distances.push_back(distance(scn_.node_positions[static_cast<size_t>(tx)],
                                       scn_.node_positions[static_cast<size_t>(own_rx)]));
        // remaining receivers by ascending node index
        std::vector<int> others;
        for (int p = 0; p < scn_.n_pairs(); ++p)
            if (p != i) others.push_back(scn_.pairs[static_cast<size_t>(p)].rx);
        std::sort(others.begin(), others.end());
        for (int rx : others)
            o.distances.push_back(distance(scn_.node_positions[static_cast<size_t>(tx)],
                                           scn_.node_positions[static_cast<size_t>(rx)]));
        o.caused_interference = 0.0;
        o.sensed_interference = -1.0;
    }
    refill_buffers();
    ready_ = true;
    return obs_;
}

void CdmaEnv::begin_episode() {
    if (!ready_) throw std::logic_error("begin_episode before reset");
    refill_buffers();
}

void CdmaEnv::refill_buffers() {
    for (auto& o : obs_) o.buffer_len = traffic_.initial_buffer;
}

void CdmaEnv::apply_arrivals() {
    for (auto& o : obs_) {
        if (traffic_.mode == TrafficMode::Backlogged) {
            o.buffer_len = std::max(o.buffer_len, traffic_.initial_buffer);
        } else {
            o.buffer_len += rng_.poisson(traffic_.rate);
        }
    }
}

StepOutcome CdmaEnv::step(std::span<const ActionValue> actions) {
    if (!ready_) throw std::logic_error("step before reset");
    if (actions.size() != static_cast<size_t>(scn_.n_pairs()))
        throw std::invalid_argument("expected one action per pair");

    const int n = scn_.n_pairs();
    std::vector<ActiveTx> active;
    std::vector<bool> transmits(static_cast<size_t>(n), false);
    for (int i = 0; i < n; ++i) {
        if (obs_[static_cast<size_t>(i)].buffer_len <= 0) continue;
        const double p = actions[static_cast<size_t>(i)].power;
        if (p < scn_.p_min || p > scn_.p_max)
            throw std::invalid_argument("action power " + std::to_string(p) +
                                        " mW outside [p_min, p_max] for pair " +
                                        std::to_string(i));
        transmits[static_cast<size_t>(i)] = true;
        active.push_back(ActiveTx{scn_.pairs[static_cast<size_t>(i)].tx, p});
    }

    StepOutcome out;
    out.slot = slot_;
    out.agents.resize(static_cast<size_t>(n));

    for (int i = 0; i < n; ++i) {
        auto& a = out.agents[static_cast<size_t>(i)];
        if (!transmits[static_cast<size_t>(i)]) continue; // idle: zero reward, no ACK update

        const auto& pair = scn_.pairs[static_cast<size_t>(i)];
        const double power = actions[static_cast<size_t>(i)].power;
        const double gamma = sinr(scn_, pair.rx, active);
        const double caused = caused_interference(scn_, pair.tx, power);

        a.transmitted = true;
        a.power = power;
        a.sinr = gamma;
        a.success = gamma >= scn_.sinr_threshold;
        if (a.success) {
            a.reward = std::min(gamma / norm_.sinr_divisor, 1.0);
        } else {
            a.reward = -std::min(caused / norm_.interference_divisor, 1.0);
        }

        auto& o = obs_[static_cast<size_t>(i)];
        o.caused_interference = caused;
        o.sensed_interference = a.success ? sensed_interference_at(scn_, pair.rx, active) : -1.0;
        if (a.success || !traffic_.retransmit_failed)
            o.buffer_len = std::max(0, o.buffer_len - 1);
    }

    apply_arrivals();
    ++slot_;
    for (int i = 0; i < n; ++i) out.agents[static_cast<size_t>(i)].next_obs = obs_[static_cast<size_t>(i)];
    return out;
}

std::vector<double> CdmaEnv::observation_vector(const Observation& obs) const {
    std::vector<double> v;
    v.reserve(obs.distances.size() + 3);
    const double diam = diameter_ > 0.0 ? diameter_ : 1.0;
    for (double d : obs.distances) v.push_back(d / diam);
    v.push_back(static_cast<double>(obs.buffer_len) /
                static_cast<double>(std::max(1, traffic_.initial_buffer)));
    v.push_back(obs.caused_interference / norm_.interference_divisor);
    v.push_back(obs.sensed_interference < 0.0
                    ? -1.0
                    : obs.sensed_interference / norm_.interference_divisor);
    return v;
}

Normalizers CdmaEnv::calibrate_normalizers(const NetworkScenario& scn,
                                           const TrafficModel& traffic, long n_slots,
                                           uint64_t seed) {
    if (n_slots < 1) throw std::invalid_argument("calibration needs n_slots >= 1");

    CdmaEnv env(scn, traffic, Normalizers{1.0, 1.0});
    env.reset(seed);
    Rng powers(derive_seed(seed, 1));

    double max_sinr = 0.0;
    double max_caused = 0.0;
    std::vector<ActionValue> actions(static_cast<size_t>(scn.n_pairs()));
    for (long s = 0; s < n_slots; ++s) {
        for (auto& a : actions) a.power = powers.uniform(scn.p_min, scn.p_max);
        const StepOutcome out = env.step(actions);
        for (const auto& a : out.agents) {
            if (!a.transmitted) continue;
            max_sinr = std::max(max_sinr, a.sinr);
            max_caused = std::max(max_caused, a.next_obs.caused_interference);
        }
    }
    return Normalizers{std::max(max_sinr, 1e-12), std::max(max_caused, 1e-12)};
}

} // namespace cdmarl
