#include "cdmarl/dcpc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cdmarl {

DcpcState dcpc_update(const DcpcState& state, std::span<const double> measured_sinr,
                      int* n_invalid) {
    if (measured_sinr.size() != state.power.size())
        throw std::invalid_argument("one SINR measurement per pair required");
    if (!(state.target_sinr > 0.0))
        throw std::invalid_argument("target SINR must be > 0");

    // The exact fixed point sits on the success boundary, where float rounding
    // of the SINR flips slots between ACK and no-ACK. A relative guard a few
    // orders above machine epsilon keeps the tracker just clear of the edge.
    constexpr double kGuard = 1.0 + 1e-9;

    DcpcState next = state;
    int invalid = 0;
    for (size_t i = 0; i < state.power.size(); ++i) {
        const double gamma = measured_sinr[i];
        if (!(gamma > 0.0) || !std::isfinite(gamma)) {
            ++invalid; // measurement error: hold power
            continue;
        }
        next.power[i] = std::clamp(state.power[i] * state.target_sinr * kGuard / gamma,
                                   state.p_min, state.p_max);
    }
    if (n_invalid) *n_invalid = invalid;
    return next;
}

DcpcRunResult run_dcpc(CdmaEnv& env, long n_slots, double initial_power, uint64_t seed) {
    if (n_slots < 1) throw std::invalid_argument("n_slots must be >= 1");
    const auto& scn = env.scenario();

    env.reset(seed);
    DcpcState state;
    state.target_sinr = scn.sinr_threshold;
    state.p_min = scn.p_min;
    state.p_max = scn.p_max;
    state.power.assign(static_cast<size_t>(env.n_agents()),
                       std::clamp(initial_power, scn.p_min, scn.p_max));

    DcpcRunResult result;
    result.records.reserve(static_cast<size_t>(n_slots) * state.power.size());

    std::vector<ActionValue> actions(state.power.size());
    std::vector<double> measured(state.power.size());
    double power_sum = 0.0;

    for (long slot = 0; slot < n_slots; ++slot) {
        for (size_t i = 0; i < state.power.size(); ++i) actions[i].power = state.power[i];
        const StepOutcome out = env.step(actions);

        std::fill(measured.begin(), measured.end(), -1.0);
        for (size_t i = 0; i < out.agents.size(); ++i) {
            const auto& a = out.agents[i];
            result.records.push_back(StepRecord{slot + 1, static_cast<int>(i), a.power,
                                                a.sinr, a.transmitted, a.success, a.reward,
                                                a.next_obs.caused_interference});
            if (!a.transmitted) continue;
            ++result.transmissions;
            power_sum += a.power;
            if (a.success) {
                ++result.successes;
                measured[i] = a.sinr; // ACK delivered the measurement
            } else {
                state.power[i] = state.p_max; // no ACK: conservative re-acquisition
            }
        }
        state = dcpc_update(state, measured);
    }

    result.pdr = result.transmissions > 0
                     ? static_cast<double>(result.successes) /
                           static_cast<double>(result.transmissions)
                     : 0.0;
    result.mean_power =
        result.transmissions > 0 ? power_sum / static_cast<double>(result.transmissions) : 0.0;
    result.final_state = state;
    return result;
}

} // namespace cdmarl
