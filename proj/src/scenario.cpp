#include "cdmarl/scenario.hpp"

#include <algorithm>
#include <stdexcept>

namespace cdmarl {

namespace {

void check_node(const NetworkScenario& scn, int node, const char* what) {
    if (node < 0 || node >= scn.n_nodes())
        throw std::out_of_range(std::string(what) + " node index " + std::to_string(node) +
                                " outside [0, " + std::to_string(scn.n_nodes()) + ")");
}

} // namespace

int NetworkScenario::pair_of_tx(int node) const {
    for (int p = 0; p < n_pairs(); ++p)
        if (pairs[static_cast<size_t>(p)].tx == node) return p;
    return -1;
}

int NetworkScenario::pair_of_rx(int node) const {
    for (int p = 0; p < n_pairs(); ++p)
        if (pairs[static_cast<size_t>(p)].rx == node) return p;
    return -1;
}

double NetworkScenario::diameter() const {
    double d = 0.0;
    for (size_t i = 0; i < node_positions.size(); ++i)
        for (size_t j = i + 1; j < node_positions.size(); ++j)
            d = std::max(d, distance(node_positions[i], node_positions[j]));
    return d;
}

void NetworkScenario::validate() const {
    if (node_positions.empty()) throw std::invalid_argument("scenario has no nodes");
    if (pairs.empty()) throw std::invalid_argument("scenario has no tx/rx pairs");
    if (!(path_loss_exp > 0.0)) throw std::invalid_argument("path_loss_exp must be > 0");
    if (spreading_gain < 1) throw std::invalid_argument("spreading_gain must be >= 1");
    if (!(noise_power > 0.0)) throw std::invalid_argument("noise_power must be > 0");
    if (!(sinr_threshold > 0.0)) throw std::invalid_argument("sinr_threshold must be > 0");
    if (!(p_min < p_max)) throw std::invalid_argument("p_min must be < p_max");
    if (!(p_min > 0.0)) throw std::invalid_argument("p_min must be > 0");

    if (!tx_gain_db.empty() && tx_gain_db.size() != node_positions.size())
        throw std::invalid_argument("tx_gain_db size does not match node count");
    if (!rx_gain_db.empty() && rx_gain_db.size() != node_positions.size())
        throw std::invalid_argument("rx_gain_db size does not match node count");

    std::vector<int> seen;
    for (const auto& p : pairs) {
        check_node(*this, p.tx, "pair tx");
        check_node(*this, p.rx, "pair rx");
        if (p.tx == p.rx) throw std::invalid_argument("pair connects a node to itself");
        for (int n : {p.tx, p.rx}) {
            if (std::find(seen.begin(), seen.end(), n) != seen.end())
                throw std::invalid_argument("node " + std::to_string(n) +
                                            " appears in more than one pair");
            seen.push_back(n);
        }
    }

    for (size_t i = 0; i < node_positions.size(); ++i)
        for (size_t j = i + 1; j < node_positions.size(); ++j)
            if (distance(node_positions[i], node_positions[j]) == 0.0)
                throw std::invalid_argument("nodes " + std::to_string(i) + " and " +
                                            std::to_string(j) + " share a position");
}

LinkGain link_gain(const NetworkScenario& scn, int tx, int rx) {
    check_node(scn, tx, "link tx");
    check_node(scn, rx, "link rx");
    if (tx == rx) throw std::invalid_argument("link from a node to itself is undefined");

    const double d = distance(scn.node_positions[static_cast<size_t>(tx)],
                              scn.node_positions[static_cast<size_t>(rx)]);
    if (d == 0.0)
        throw std::domain_error("degenerate geometry: nodes " + std::to_string(tx) + " and " +
                                std::to_string(rx) + " are coincident");

    const double db = scn.tx_gain(tx) + scn.rx_gain(rx);
    return LinkGain{std::pow(10.0, db / 10.0) * std::pow(d, -scn.path_loss_exp)};
}

double sinr(const NetworkScenario& scn, int rx, std::span<const ActiveTx> active) {
    check_node(scn, rx, "sinr rx");
    const int pair = scn.pair_of_rx(rx);
    if (pair < 0)
        throw std::invalid_argument("node " + std::to_string(rx) + " is not a receiver");
    const int own_tx = scn.pairs[static_cast<size_t>(pair)].tx;

    double own_power = -1.0;
    double interference = 0.0;
    for (const auto& t : active) {
        if (t.node == own_tx) {
            own_power = t.power;
        } else {
            interference += t.power * link_gain(scn, t.node, rx).gain;
        }
    }
    if (own_power < 0.0)
        throw std::invalid_argument("own transmitter " + std::to_string(own_tx) +
                                    " is not transmitting");
    if (own_power < scn.p_min || own_power > scn.p_max)
        throw std::invalid_argument("transmit power " + std::to_string(own_power) +
                                    " mW outside [p_min, p_max]");

    const double wanted =
        static_cast<double>(scn.spreading_gain) * own_power * link_gain(scn, own_tx, rx).gain;
    return wanted / (interference + scn.noise_power);
}

double caused_interference(const NetworkScenario& scn, int tx, double power) {
    check_node(scn, tx, "interference tx");
    const int pair = scn.pair_of_tx(tx);
    if (pair < 0)
        throw std::invalid_argument("node " + std::to_string(tx) + " is not a transmitter");

    double total = 0.0;
    for (int p = 0; p < scn.n_pairs(); ++p) {
        if (p == pair) continue;
        total += power * link_gain(scn, tx, scn.pairs[static_cast<size_t>(p)].rx).gain;
    }
    return total;
}

double sensed_interference_at(const NetworkScenario& scn, int rx,
                              std::span<const ActiveTx> active) {
    check_node(scn, rx, "sensed rx");
    const int pair = scn.pair_of_rx(rx);
    if (pair < 0)
        throw std::invalid_argument("node " + std::to_string(rx) + " is not a receiver");
    const int own_tx = scn.pairs[static_cast<size_t>(pair)].tx;

    double total = 0.0;
    for (const auto& t : active)
        if (t.node != own_tx) total += t.power * link_gain(scn, t.node, rx).gain;
    return total;
}

} // namespace cdmarl
