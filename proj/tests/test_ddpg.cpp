#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "cdmarl/ddpg.hpp"
#include "cdmarl/training.hpp"

using namespace cdmarl;

namespace {

NetworkScenario one_pair() {
    NetworkScenario s;
    s.node_positions = {{0.0, 0.0}, {1.0, 0.0}};
    s.pairs = {{0, 1}};
    s.path_loss_exp = 2.0;
    s.spreading_gain = 64;
    s.noise_power = 1e-6;
    s.sinr_threshold = 10.0;
    s.tx_gain_db.assign(2, 0.0);
    s.rx_gain_db.assign(2, 0.0);
    return s;
}

DdpgOptions small_options() {
    DdpgOptions opt;
    opt.batch_size = 8;
    opt.replay_capacity = 256;
    opt.warmup_steps = 10;
    opt.critic_hidden = {8, 8};
    return opt;
}

Experience make_exp(std::vector<double> s, double a, double r, std::vector<double> s2,
                    bool terminal = false) {
    return Experience{std::move(s), a, r, std::move(s2), terminal};
}

} // namespace

TEST_CASE("discounted return of a long constant stream approaches the geometric limit") {
    std::vector<double> ones(200, 1.0);
    CHECK(discounted_return(ones, 0.5) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("discounted return arithmetic") {
    const std::vector<double> r = {1.0, 0.0, 2.0};
    CHECK(discounted_return(r, 0.9) == doctest::Approx(2.62).epsilon(1e-12));
}

TEST_CASE("zero discount keeps only the first reward") {
    const std::vector<double> r = {3.5, 100.0, -50.0};
    CHECK(discounted_return(r, 0.0) == 3.5);
}

TEST_CASE("discount factor one is rejected") {
    const std::vector<double> r = {1.0};
    CHECK_THROWS_AS(discounted_return(r, 1.0), std::invalid_argument);
}

TEST_CASE("discounted return satisfies its own recursion") {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> r;
        const int n = 1 + static_cast<int>(rng.uniform_index(20));
        for (int i = 0; i < n; ++i) r.push_back(rng.uniform(-1.0, 1.0));
        const double gamma = rng.uniform(0.0, 0.99);
        const std::vector<double> tail(r.begin() + 1, r.end());
        CHECK(discounted_return(r, gamma) ==
              doctest::Approx(r[0] + gamma * discounted_return(tail, gamma)).epsilon(1e-12));
    }
}

TEST_CASE("replay buffer evicts strictly FIFO and caps at capacity") {
    ReplayBuffer buf(4);
    for (int i = 0; i < 7; ++i)
        buf.push(make_exp({static_cast<double>(i)}, 0.0, 0.0, {0.0}));
    CHECK(buf.size() == 4);
    // survivors are 3, 4, 5, 6 in ring order
    std::vector<double> kept;
    for (size_t i = 0; i < buf.size(); ++i) kept.push_back(buf.at(i).state[0]);
    std::sort(kept.begin(), kept.end());
    CHECK(kept == std::vector<double>{3.0, 4.0, 5.0, 6.0});
}

TEST_CASE("replay sampling is without replacement and deterministic") {
    ReplayBuffer buf(64);
    for (int i = 0; i < 64; ++i)
        buf.push(make_exp({static_cast<double>(i)}, 0.0, 0.0, {0.0}));

    Rng rng_a(5), rng_b(5);
    const auto batch_a = buf.sample(16, rng_a);
    const auto batch_b = buf.sample(16, rng_b);
    CHECK(batch_a == batch_b);

    std::vector<const Experience*> unique(batch_a.begin(), batch_a.end());
    std::sort(unique.begin(), unique.end());
    CHECK(std::adjacent_find(unique.begin(), unique.end()) == unique.end());

    CHECK_THROWS_AS(buf.sample(65, rng_a), std::invalid_argument);
}

TEST_CASE("zero actor maps to the midpoint power") {
    DdpgOptions opt = small_options();
    DdpgAgent agent(4, 0.1, 5.0, opt, 1);
    CHECK(agent.power_from_normalized(0.0) == doctest::Approx(2.55).epsilon(1e-12));
    CHECK(agent.power_from_normalized(1.0) == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(agent.power_from_normalized(-1.0) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(agent.power_from_normalized(3.0) == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(agent.power_from_normalized(-3.0) == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("actions always stay inside the power bounds") {
    DdpgAgent agent(3, 0.1, 5.0, small_options(), 9);
    agent.set_noise_sigma(2.0); // exaggerated noise still may not escape the clamp
    Rng rng(10);
    for (int i = 0; i < 500; ++i) {
        const std::vector<double> obs = {rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0),
                                         rng.uniform(-2.0, 2.0)};
        const double p = agent.act(obs, true).power;
        CHECK(p >= 0.1);
        CHECK(p <= 5.0);
    }
}

TEST_CASE("seeded exploration noise replays exactly") {
    auto run = [] {
        DdpgAgent agent(2, 0.1, 5.0, small_options(), 21);
        agent.set_noise_sigma(0.3);
        std::vector<double> actions;
        const std::vector<double> obs = {0.5, -0.5};
        for (int i = 0; i < 50; ++i) actions.push_back(agent.act(obs, true).power);
        return actions;
    };
    CHECK(run() == run());
}

TEST_CASE("noise-free action is deterministic") {
    DdpgAgent agent(2, 0.1, 5.0, small_options(), 22);
    const std::vector<double> obs = {0.3, 0.7};
    const double first = agent.act(obs, false).power;
    for (int i = 0; i < 5; ++i) CHECK(agent.act(obs, false).power == first);
}

TEST_CASE("critic fits a constant reward under zero discount") {
    DdpgOptions opt = small_options();
    opt.gamma = 0.0;
    opt.tau = 0.0;
    DdpgAgent agent(2, 0.1, 5.0, opt, 31);

    const double c = 0.7;
    Rng rng(32);
    std::vector<Experience> pool;
    for (int i = 0; i < 64; ++i)
        pool.push_back(make_exp({rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)},
                                rng.uniform(-1.0, 1.0), c,
                                {rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)}));

    double last_loss = 1.0;
    for (int step = 0; step < 2000; ++step) {
        std::vector<const Experience*> batch;
        for (size_t k = 0; k < 8; ++k) batch.push_back(&pool[rng.uniform_index(pool.size())]);
        last_loss = agent.train_on(batch).critic_loss;
    }
    CHECK(last_loss < 1e-3);

    // Q(s, a) is close to c everywhere on the pool
    for (const auto& e : pool) {
        std::vector<double> sa = e.state;
        sa.push_back(e.action);
        const double q = nn::forward(agent.critic(), sa)[0];
        CHECK(q == doctest::Approx(c).epsilon(0.1));
    }
}

TEST_CASE("terminal experiences use the reward as the full target") {
    // gamma = 0.5 with terminal=true must train exactly like gamma = 0 with
    // terminal=false on the same batch
    DdpgOptions opt_a = small_options();
    opt_a.gamma = 0.5;
    DdpgOptions opt_b = small_options();
    opt_b.gamma = 0.0;
    DdpgAgent a(2, 0.1, 5.0, opt_a, 41);
    DdpgAgent b(2, 0.1, 5.0, opt_b, 41);

    Rng rng(42);
    std::vector<Experience> terminal_pool, plain_pool;
    for (int i = 0; i < 16; ++i) {
        const std::vector<double> s = {rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
        const std::vector<double> s2 = {rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
        const double act = rng.uniform(-1.0, 1.0);
        const double r = rng.uniform(-1.0, 1.0);
        terminal_pool.push_back(make_exp(s, act, r, s2, true));
        plain_pool.push_back(make_exp(s, act, r, s2, false));
    }
    std::vector<const Experience*> batch_a, batch_b;
    for (int i = 0; i < 16; ++i) {
        batch_a.push_back(&terminal_pool[static_cast<size_t>(i)]);
        batch_b.push_back(&plain_pool[static_cast<size_t>(i)]);
    }
    const auto diag_a = a.train_on(batch_a);
    const auto diag_b = b.train_on(batch_b);
    CHECK(diag_a.critic_loss == diag_b.critic_loss);
    CHECK(a.critic().weights == b.critic().weights);
    CHECK(a.actor().weights == b.actor().weights);
}

TEST_CASE("tau zero freezes the target networks") {
    DdpgOptions opt = small_options();
    opt.tau = 0.0;
    DdpgAgent agent(2, 0.1, 5.0, opt, 51);
    const nn::MlpParams actor_t = agent.actor_target();
    const nn::MlpParams critic_t = agent.critic_target();

    Rng rng(52);
    std::vector<Experience> pool;
    for (int i = 0; i < 8; ++i)
        pool.push_back(make_exp({rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)},
                                rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
                                {rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)}));
    std::vector<const Experience*> batch;
    for (const auto& e : pool) batch.push_back(&e);
    agent.train_on(batch);

    CHECK(agent.actor_target().weights == actor_t.weights);
    CHECK(agent.actor_target().biases == actor_t.biases);
    CHECK(agent.critic_target().weights == critic_t.weights);
    CHECK(agent.critic_target().biases == critic_t.biases);
    // online networks did move
    CHECK(agent.critic().weights != critic_t.weights);
}

TEST_CASE("empty batch is rejected") {
    DdpgAgent agent(2, 0.1, 5.0, small_options(), 61);
    CHECK_THROWS_AS(agent.train_on({}), std::invalid_argument);
}

TEST_CASE("one training step books one experience per active agent") {
    CdmaEnv env(one_pair(), TrafficModel{TrafficMode::Backlogged, 0.0, 5, false},
                Normalizers{1e9, 1.0});
    std::vector<DdpgAgent> agents;
    agents.emplace_back(4, 0.1, 5.0, small_options(), 71);

    TrainingOptions opt;
    opt.n_steps = 1;
    run_training(env, agents, opt, std::nullopt, 72);
    CHECK(agents[0].replay().size() == 1);
}

TEST_CASE("training trajectories replay bitwise under the same seed") {
    auto run = [] {
        CdmaEnv env(one_pair(), TrafficModel{TrafficMode::Poisson, 0.8, 2, false},
                    Normalizers{1e9, 1.0});
        std::vector<DdpgAgent> agents;
        DdpgOptions opt = small_options();
        opt.warmup_steps = 5;
        agents.emplace_back(4, 0.1, 5.0, opt, 81);
        TrainingOptions topt;
        topt.n_steps = 60;
        topt.episode_slots = 25;
        const TrainingResult res = run_training(env, agents, topt, std::nullopt, 82);
        std::vector<double> trace;
        for (const auto& r : res.records) {
            trace.push_back(r.reward);
            trace.push_back(r.power);
        }
        return trace;
    };
    CHECK(run() == run());
}
