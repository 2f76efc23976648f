#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "cdmarl/rng.hpp"
#include "cdmarl/scenario.hpp"

using namespace cdmarl;

namespace {

NetworkScenario two_node(double d, double alpha) {
    NetworkScenario s;
    s.node_positions = {{0.0, 0.0}, {d, 0.0}};
    s.pairs = {{0, 1}};
    s.path_loss_exp = alpha;
    s.spreading_gain = 64;
    s.noise_power = 1e-6;
    s.sinr_threshold = 10.0;
    s.tx_gain_db.assign(2, 0.0);
    s.rx_gain_db.assign(2, 0.0);
    return s;
}

// the stock 3-pair row layout used across the test suites
NetworkScenario three_pair_row() {
    NetworkScenario s;
    s.node_positions = {{0.0, 0.0}, {0.0, 4.0},  {10.0, 0.0},
                        {10.0, 4.0}, {20.0, 0.0}, {20.0, 4.0}};
    s.pairs = {{0, 1}, {2, 3}, {4, 5}};
    s.path_loss_exp = 2.2;
    s.spreading_gain = 16;
    s.noise_power = 0.004;
    s.sinr_threshold = 40.0;
    s.tx_gain_db.assign(6, 0.0);
    s.rx_gain_db.assign(6, 0.0);
    return s;
}

} // namespace

TEST_CASE("link gain at unit distance is one") {
    const auto s = two_node(1.0, 2.0);
    CHECK(link_gain(s, 0, 1).gain == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("link gain follows inverse square") {
    const auto s = two_node(2.0, 2.0);
    CHECK(link_gain(s, 0, 1).gain == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("link gain with dB offsets matches the scalar formula") {
    auto s = two_node(3.0, 2.7);
    s.tx_gain_db = {3.0, 0.0};
    // 10^0.3 * 3^-2.7, frozen from an independent evaluation
    CHECK(link_gain(s, 0, 1).gain == doctest::Approx(0.10274781906193262).epsilon(1e-12));
}

TEST_CASE("link gain rejects self links and bad indices") {
    const auto s = two_node(1.0, 2.0);
    CHECK_THROWS_AS(link_gain(s, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(link_gain(s, 0, 5), std::out_of_range);
}

TEST_CASE("coincident nodes are a degenerate geometry") {
    NetworkScenario s = two_node(1.0, 2.0);
    s.node_positions.push_back({0.0, 0.0}); // same as node 0
    CHECK_THROWS_AS(link_gain(s, 0, 2), std::domain_error);
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("scenario validation catches overlapping pairs") {
    NetworkScenario s = three_pair_row();
    s.pairs[1] = {2, 1}; // node 1 already receives for pair 0
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("single transmitter sinr is noise limited") {
    const auto s = two_node(1.0, 2.0);
    const ActiveTx active[] = {{0, 1.0}};
    CHECK(sinr(s, 1, active) == doctest::Approx(6.4e7).epsilon(1e-12));
}

TEST_CASE("two equal transmitters at unit gain give sinr one as noise vanishes") {
    NetworkScenario s;
    // square layout: both cross links and own links have length 1
    s.node_positions = {{0.0, 0.0}, {0.0, 1.0}, {1.0, 0.0}, {1.0, 1.0}};
    s.pairs = {{0, 1}, {2, 3}};
    s.path_loss_exp = 2.0;
    s.spreading_gain = 1;
    s.noise_power = 1e-15;
    s.sinr_threshold = 0.5;
    const ActiveTx active[] = {{0, 1.0}, {2, 1.0}};
    // own gain 1, interferer gain sqrt(2)^-2 = 0.5
    CHECK(sinr(s, 1, active) == doctest::Approx(2.0).epsilon(1e-9));

    // symmetric variant with interferer at distance 1 as well
    s.node_positions = {{0.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}, {2.0, 1.0}};
    const ActiveTx both[] = {{0, 1.0}, {2, 1.0}};
    CHECK(sinr(s, 1, both) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("three pair sinr matches the exhaustive interference sum") {
    const auto s = three_pair_row();
    const ActiveTx active[] = {{0, 1.5}, {2, 0.7}, {4, 3.2}};

    // independent oracle: brute-force sum over every cross link
    auto gain = [&](int t, int r) {
        return std::pow(distance(s.node_positions[t], s.node_positions[r]), -s.path_loss_exp);
    };
    for (int p = 0; p < 3; ++p) {
        const int rx = s.pairs[p].rx;
        const int own = s.pairs[p].tx;
        double interference = 0.0;
        double own_power = 0.0;
        for (const auto& t : active) {
            if (t.node == own)
                own_power = t.power;
            else
                interference += t.power * gain(t.node, rx);
        }
        const double expected =
            s.spreading_gain * own_power * gain(own, rx) / (interference + s.noise_power);
        CHECK(sinr(s, rx, active) == doctest::Approx(expected).epsilon(1e-12));
    }

    // frozen values from an independent script over the same layout
    CHECK(sinr(s, 1, active) == doctest::Approx(95.04831128580949).epsilon(1e-12));
    CHECK(sinr(s, 3, active) == doctest::Approx(18.175290950975864).epsilon(1e-12));
    CHECK(sinr(s, 5, active) == doctest::Approx(249.39206759439313).epsilon(1e-12));
}

TEST_CASE("sinr requires the own transmitter") {
    const auto s = three_pair_row();
    const ActiveTx active[] = {{0, 1.0}, {4, 1.0}};
    CHECK_THROWS_AS(sinr(s, 3, active), std::invalid_argument);
}

TEST_CASE("sinr rejects out-of-range power") {
    const auto s = two_node(1.0, 2.0);
    const ActiveTx too_hot[] = {{0, 50.0}};
    CHECK_THROWS_AS(sinr(s, 1, too_hot), std::invalid_argument);
}

TEST_CASE("caused interference of a lone pair is zero") {
    const auto s = two_node(1.0, 2.0);
    CHECK(caused_interference(s, 0, 1.0) == 0.0);
}

TEST_CASE("caused interference sums unit gains exactly") {
    // transmitter 0 at distance 1 from both foreign receivers
    NetworkScenario s;
    s.node_positions = {{0.0, 0.0}, {5.0, 5.0},  {9.0, 0.0}, {1.0, 0.0},
                        {0.0, 9.0}, {0.0, 1.0}};
    s.pairs = {{0, 1}, {2, 3}, {4, 5}};
    s.path_loss_exp = 2.0;
    s.spreading_gain = 1;
    s.noise_power = 1e-9;
    s.sinr_threshold = 1.0;
    CHECK(caused_interference(s, 0, 2.0) == doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("caused interference matches the exhaustive sum on the row layout") {
    const auto s = three_pair_row();
    auto gain = [&](int t, int r) {
        return std::pow(distance(s.node_positions[t], s.node_positions[r]), -s.path_loss_exp);
    };
    const double powers[] = {1.5, 0.7, 3.2};
    const double frozen[] = {0.010011555681619355, 0.007502815164541881,
                             0.021357985454121292};
    for (int p = 0; p < 3; ++p) {
        const int tx = s.pairs[p].tx;
        double expected = 0.0;
        for (int q = 0; q < 3; ++q)
            if (q != p) expected += powers[p] * gain(tx, s.pairs[q].rx);
        CHECK(caused_interference(s, tx, powers[p]) ==
              doctest::Approx(expected).epsilon(1e-12));
        CHECK(caused_interference(s, tx, powers[p]) ==
              doctest::Approx(frozen[p]).epsilon(1e-12));
    }
}

TEST_CASE("sinr is monotone in own and interferer power") {
    const auto s = three_pair_row();
    double prev_own = 0.0;
    double prev_victim = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 49; ++i) {
        const double p = 0.1 + 0.1 * i;
        const ActiveTx active[] = {{0, 1.0}, {2, p}, {4, 1.0}};
        const double own = sinr(s, 3, active);
        CHECK(own > prev_own); // own power up, own sinr up
        prev_own = own;
        const double victim = sinr(s, 1, active);
        CHECK(victim < prev_victim); // interferer power up, victim sinr down
        prev_victim = victim;
    }
}

TEST_CASE("symmetric single-interferer sinr matches the closed form") {
    // L=1, own gain g, interferer gain g: sinr = p_own / (p_int + N/g)
    NetworkScenario s;
    s.node_positions = {{0.0, 0.0}, {0.0, 2.0}, {0.0, 4.0}, {2.0, 2.0}};
    s.pairs = {{0, 1}, {2, 3}};
    s.path_loss_exp = 2.0;
    s.spreading_gain = 1;
    s.noise_power = 1e-4;
    s.sinr_threshold = 0.1;
    const double g = std::pow(2.0, -2.0);
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        const double p_own = rng.uniform(0.1, 5.0);
        const double p_int = rng.uniform(0.1, 5.0);
        const ActiveTx active[] = {{0, p_own}, {2, p_int}};
        const double expected = p_own / (p_int + s.noise_power / g);
        CHECK(sinr(s, 1, active) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("caused interference is linear in power") {
    const auto s = three_pair_row();
    Rng rng(11);
    for (int i = 0; i < 100; ++i) {
        const double p = rng.uniform(0.1, 2.5);
        CHECK(caused_interference(s, 2, 2.0 * p) == 2.0 * caused_interference(s, 2, p));
    }
}

TEST_CASE("outputs are finite and non-negative across random inputs") {
    const auto s = three_pair_row();
    Rng rng(13);
    for (int i = 0; i < 200; ++i) {
        const ActiveTx active[] = {{0, rng.uniform(0.1, 5.0)},
                                   {2, rng.uniform(0.1, 5.0)},
                                   {4, rng.uniform(0.1, 5.0)}};
        for (int p = 0; p < 3; ++p) {
            const double g = sinr(s, s.pairs[p].rx, active);
            CHECK(std::isfinite(g));
            CHECK(g >= 0.0);
            const double c = caused_interference(s, s.pairs[p].tx, active[p].power);
            CHECK(std::isfinite(c));
            CHECK(c >= 0.0);
        }
    }
}
