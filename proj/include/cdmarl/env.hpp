#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cdmarl/rng.hpp"
#include "cdmarl/scenario.hpp"

namespace cdmarl {

// Per-agent state vector. Distances list the own receiver first, then the
// other pairs' receivers by ascending node index.
struct Observation {
    std::vector<double> distances;     // meters, length == n_pairs
    int buffer_len = 0;                // packets queued
    double caused_interference = 0.0;  // mW, from this agent's last transmission
    double sensed_interference = -1.0; // mW fed back via ACK, -1 when unacknowledged
};

struct ActionValue {
    double power = 0.0; // mW, must lie in [p_min, p_max]
};

enum class TrafficMode { Backlogged, Poisson };

struct TrafficModel {
    TrafficMode mode = TrafficMode::Backlogged;
    double rate = 0.0;      // poisson arrivals per slot
    int initial_buffer = 10;
    bool retransmit_failed = false; // keep failed packets queued instead of dropping
};

// Observation/reward scaling constants, found by running the scenario under
// random powers and recording the largest values seen.
struct Normalizers {
    double sinr_divisor = 1.0;
    double interference_divisor = 1.0;
};

struct AgentStep {
    Observation next_obs;
    double reward = 0.0;
    bool transmitted = false;
    bool success = false;
    double sinr = 0.0;  // raw SINR, 0 when idle
    double power = 0.0; // mW actually used, 0 when idle
};

struct StepOutcome {
    uint64_t slot = 0;
    std::vector<AgentStep> agents;
};

// One trajectory-log row, the unit of every run CSV (training, evaluation,
// and the DCPC baseline all share this schema).
struct StepRecord {
    long step = 0;
    int agent = 0;
    double power = 0.0;
    double sinr = 0.0;
    bool transmitted = false;
    bool success = false;
    double reward = 0.0;
    double interference = 0.0; // caused interference, mW
};

// Slotted multi-pair DS-CDMA environment with a gym-style reset/step contract.
// All pairs with queued packets transmit simultaneously each slot; a packet is
// delivered iff its SINR clears the scenario threshold, and the ACK carries the
// receiver's sensed interference back to the transmitter.
class CdmaEnv {
  public:
    CdmaEnv(NetworkScenario scn, TrafficModel traffic, Normalizers norm);

    // Hard reset: reseeds the RNG, refills buffers, clears interference memory.
    std::vector<Observation> reset(uint64_t seed);

    // Episodic cut inside one run: refreshes buffers from the traffic model but
    // keeps the RNG stream and the agents' last-ACK memory.
    void begin_episode();

    // One slot. actions[i] is pair i's requested power; it is ignored when the
    // pair's buffer is empty. Powers outside [p_min, p_max] for a transmitting
    // pair throw std::invalid_argument.
    StepOutcome step(std::span<const ActionValue> actions);

    // Flat encoding [distances..., buffer, caused, sensed] with each feature
    // scaled by its divisor; the -1 no-ACK sentinel passes through unscaled.
    std::vector<double> observation_vector(const Observation& obs) const;

    const Observation& observation(int agent) const { return obs_[static_cast<size_t>(agent)]; }
    std::vector<Observation> observations() const { return obs_; }

    int n_agents() const { return scn_.n_pairs(); }
    int obs_dim() const { return scn_.n_pairs() + 3; }
    uint64_t slot() const { return slot_; }
    const NetworkScenario& scenario() const { return scn_; }
    const Normalizers& normalizers() const { return norm_; }
    const TrafficModel& traffic() const { return traffic_; }

    // Runs n_slots with uniform-random powers and returns the largest SINR and
    // caused interference observed (floored at 1e-12). Powers come from
    // Rng(derive_seed(seed, 1)), one draw per pair per slot in pair order,
    // whether or not the pair transmits, so the stream can be replayed.
    static Normalizers calibrate_normalizers(const NetworkScenario& scn,
                                             const TrafficModel& traffic, long n_slots,
                                             uint64_t seed);

  private:
    void refill_buffers();
    void apply_arrivals();

    NetworkScenario scn_;
    TrafficModel traffic_;
    Normalizers norm_;
    double diameter_ = 1.0;
    Rng rng_;
    std::vector<Observation> obs_;
    uint64_t slot_ = 0;
    bool ready_ = false;
};

} // namespace cdmarl
