#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace cdmarl {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline double distance(const Vec2& a, const Vec2& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy);
}

struct LinkPair {
    int tx = -1;
    int rx = -1;
};

// Static DS-CDMA topology and channel constants. Spreading codes are
// abstracted to their processing gain: despreading boosts the wanted signal
// by spreading_gain while interferers add at full power.
struct NetworkScenario {
    std::vector<Vec2> node_positions;
    std::vector<LinkPair> pairs;     // disjoint tx/rx node sets
    double path_loss_exp = 2.0;      // alpha > 0
    int spreading_gain = 1;          // L >= 1
    double noise_power = 1e-9;       // mW
    double sinr_threshold = 1.0;     // success iff SINR >= threshold
    double p_min = 0.1;              // mW
    double p_max = 5.0;              // mW
    std::vector<double> tx_gain_db;  // per node, 0 if empty
    std::vector<double> rx_gain_db;  // per node, 0 if empty

    int n_nodes() const { return static_cast<int>(node_positions.size()); }
    int n_pairs() const { return static_cast<int>(pairs.size()); }

    // -1 when the node is not a transmitter / receiver of any pair
    int pair_of_tx(int node) const;
    int pair_of_rx(int node) const;

    double tx_gain(int node) const {
        return tx_gain_db.empty() ? 0.0 : tx_gain_db[static_cast<size_t>(node)];
    }
    double rx_gain(int node) const {
        return rx_gain_db.empty() ? 0.0 : rx_gain_db[static_cast<size_t>(node)];
    }

    // largest pairwise node distance; used to scale distance observations
    double diameter() const;

    // throws std::invalid_argument on any broken invariant
    void validate() const;
};

struct LinkGain {
    double gain = 0.0; // received-power multiplier, > 0 for valid links
};

// 10^((tx_gain_db + rx_gain_db)/10) * d^(-alpha).
// Throws std::invalid_argument for tx == rx, std::out_of_range for bad
// indices, std::domain_error for coincident positions.
LinkGain link_gain(const NetworkScenario& scn, int tx, int rx);

// One transmitting node and its power for the current slot.
struct ActiveTx {
    int node = -1;
    double power = 0.0; // mW
};

// Matched-filter despreading SINR at the receiver `rx`:
//   L * p_own * g(own_tx, rx) / (sum_{k != own_tx} p_k * g(k, rx) + noise).
// The paired transmitter of rx must be present in `active` with power inside
// [p_min, p_max]; anything else is a contract violation.
double sinr(const NetworkScenario& scn, int rx, std::span<const ActiveTx> active);

// Aggregate interference a transmission from `tx` at `power` injects into the
// receivers of all other pairs: sum of power * g(tx, rx_other).
double caused_interference(const NetworkScenario& scn, int tx, double power);

// Interference floor a receiver senses: total foreign received power at `rx`
// from every active transmitter except its own.
double sensed_interference_at(const NetworkScenario& scn, int rx,
                              std::span<const ActiveTx> active);

} // namespace cdmarl
