#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cdmarl/env.hpp"

namespace cdmarl {

// Distributed constrained power control: each transmitter scales its power by
// target/measured SINR, clamped into the allowed range.
struct DcpcState {
    std::vector<double> power; // mW per pair
    double target_sinr = 1.0;
    double p_min = 0.1;
    double p_max = 5.0;
};

// p' = clamp(p * target / measured, p_min, p_max) per pair. Entries with a
// non-positive (or non-finite) measurement are treated as measurement errors:
// the pair's power is left unchanged and the error count is reported through
// n_invalid when given.
DcpcState dcpc_update(const DcpcState& state, std::span<const double> measured_sinr,
                      int* n_invalid = nullptr);

struct DcpcRunResult {
    std::vector<StepRecord> records;
    double mean_power = 0.0; // mean over transmissions
    double pdr = 0.0;        // successes / transmissions
    long transmissions = 0;
    long successes = 0;
    DcpcState final_state;
};

// Closed loop against the environment: transmit at the current powers, read
// each pair's SINR from the ACK, apply the DCPC update. A failed slot carries
// no ACK, so that pair re-acquires by jumping to p_max.
DcpcRunResult run_dcpc(CdmaEnv& env, long n_slots, double initial_power, uint64_t seed);

} // namespace cdmarl
