#include <doctest.h>

#include <cmath>
#include <sstream>

#include "zmerge/pdqn.hpp"

using namespace zmerge;

namespace {

RlConfig small_rl() {
    RlConfig rl;
    rl.hidden = {16, 16};
    rl.batch_size = 8;
    rl.warmup_transitions = 8;
    return rl;
}

PdqnAgent make_agent(std::uint64_t seed, const RlConfig& rl = small_rl()) {
    Rng rng(seed);
    return PdqnAgent(rl, SimConfig{}, rng);
}

Observation random_obs(Rng& rng) {
    Observation s;
    for (auto& v : s) v = rng.uniform(-1.0, 1.0);
    return s;
}

// force the critic to a constant output vector regardless of input
void rig_constant_critic(PdqnAgent& agent, const std::array<double, 5>& out) {
    auto& p = agent.mutable_critic().parameters();
    std::fill(p.begin(), p.end(), 0.0);
    // output layer bias sits at the very end of the flat layout
    for (int i = 0; i < 5; ++i) p[p.size() - 5 + static_cast<size_t>(i)] = out[static_cast<size_t>(i)];
}

void zero_actor(PdqnAgent& agent) {
    auto& p = agent.mutable_actor().parameters();
    std::fill(p.begin(), p.end(), 0.0);
}

Transition make_transition(Rng& rng, bool terminal) {
    Transition t;
    t.s = random_obs(rng);
    t.s_next = random_obs(rng);
    t.k = static_cast<int>(rng.uniform_index(kNumActions));
    if (t.k == kActAccel) {
        t.has_x = true;
        t.x_k = rng.uniform(-4.5, 2.6);
    } else if (t.k == kActGap) {
        t.has_x = true;
        t.x_k = rng.uniform(kGapMin, kGapMax);
    }
    t.r = rng.uniform(-2.0, 1.0);
    t.terminal = terminal;
    return t;
}

}  // namespace

TEST_CASE("continuous_params: zero actor maps to the range midpoints") {
    PdqnAgent agent = make_agent(1);
    zero_actor(agent);
    Rng rng(2);
    const auto x = agent.continuous_params(random_obs(rng));
    CHECK(x[0] == doctest::Approx(-0.95));
    CHECK(x[1] == doctest::Approx(12.5));
}

TEST_CASE("continuous_params: always strictly inside the ranges") {
    PdqnAgent agent = make_agent(3);
    // exaggerate the weights so tanh saturates
    for (auto& p : agent.mutable_actor().parameters()) p *= 50.0;
    Rng rng(4);
    for (int i = 0; i < 200; ++i) {
        const auto x = agent.continuous_params(random_obs(rng));
        CHECK(x[0] >= -4.5);
        CHECK(x[0] <= 2.6);
        CHECK(x[1] >= 5.0);
        CHECK(x[1] <= 20.0);
    }
}

TEST_CASE("select_action: epsilon=1 draws all five actions uniformly") {
    PdqnAgent agent = make_agent(5);
    Rng rng(6);
    const Observation s = random_obs(rng);
    const int draws = 100000;
    std::array<int, 5> count{};
    for (int i = 0; i < draws; ++i) {
        const auto a = agent.select_action(s, 1.0, rng);
        ++count[static_cast<size_t>(a.k)];
        if (a.k == kActAccel) {
            REQUIRE(a.x.has_value());
            REQUIRE(*a.x >= -4.5);
            REQUIRE(*a.x <= 2.6);
        } else if (a.k == kActGap) {
            REQUIRE(a.x.has_value());
            REQUIRE(*a.x >= 5.0);
            REQUIRE(*a.x <= 20.0);
        } else {
            REQUIRE_FALSE(a.x.has_value());
        }
    }
    for (int k = 0; k < 5; ++k) {
        const double freq = static_cast<double>(count[static_cast<size_t>(k)]) / draws;
        CHECK(std::abs(freq - 0.2) < 0.02);
    }
}

TEST_CASE("select_action: greedy argmax with actor-provided argument") {
    PdqnAgent agent = make_agent(7);
    rig_constant_critic(agent, {0, 0, 5, 0, 0});
    zero_actor(agent);
    Rng rng(8);
    const auto a = agent.select_action(random_obs(rng), 0.0, rng);
    CHECK(a.k == kActAccel);
    REQUIRE(a.x.has_value());
    CHECK(*a.x == doctest::Approx(-0.95));  // scaled zero-actor output
}

TEST_CASE("select_action: ties break toward the lowest index") {
    PdqnAgent agent = make_agent(9);
    rig_constant_critic(agent, {5, 0, 0, 0, 5});
    Rng rng(10);
    const auto a = agent.select_action(random_obs(rng), 0.0, rng);
    CHECK(a.k == 0);
    CHECK_FALSE(a.x.has_value());
}

TEST_CASE("select_action: greedy argmax invariant to critic output shifts") {
    PdqnAgent agent = make_agent(11);
    Rng rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        const Observation s = random_obs(rng);
        const auto before = agent.select_action(s, 0.0, rng);
        // shift every output head by a constant via the output biases
        auto& p = agent.mutable_critic().parameters();
        for (int i = 0; i < 5; ++i) p[p.size() - 5 + static_cast<size_t>(i)] += 7.25;
        const auto after = agent.select_action(s, 0.0, rng);
        CHECK(before.k == after.k);
    }
}

TEST_CASE("replay buffer: bit-exact round trip and FIFO eviction") {
    ReplayBuffer buf(4);
    Rng rng(13);
    std::vector<Transition> pushed;
    for (int i = 0; i < 6; ++i) {
        pushed.push_back(make_transition(rng, i % 3 == 0));
        buf.push(pushed.back());
    }
    CHECK(buf.size() == 4);
    // slots now hold transitions 4, 5, 2, 3 (ring head advanced twice)
    CHECK(buf.at(0) == pushed[4]);
    CHECK(buf.at(1) == pushed[5]);
    CHECK(buf.at(2) == pushed[2]);
    CHECK(buf.at(3) == pushed[3]);
}

TEST_CASE("replay buffer: batch sampling is without replacement") {
    ReplayBuffer buf(128);
    Rng rng(14);
    for (int i = 0; i < 100; ++i) buf.push(make_transition(rng, false));
    for (int trial = 0; trial < 50; ++trial) {
        auto idx = buf.sample_indices(64, rng);
        CHECK(idx.size() == 64);
        std::sort(idx.begin(), idx.end());
        CHECK(std::adjacent_find(idx.begin(), idx.end()) == idx.end());
        CHECK(idx.back() < buf.size());
    }
}

TEST_CASE("double_q_target: terminal transitions cut the bootstrap") {
    PdqnAgent agent = make_agent(15);
    Rng rng(16);
    Transition t = make_transition(rng, true);
    t.r = -1.0;
    const auto y = agent.double_q_target({t});
    CHECK(y[0] == -1.0);
}

TEST_CASE("double_q_target: zero-reward terminal batch is the zero vector") {
    PdqnAgent agent = make_agent(17);
    Rng rng(18);
    std::vector<Transition> batch;
    for (int i = 0; i < 32; ++i) {
        batch.push_back(make_transition(rng, true));
        batch.back().r = 0.0;
    }
    for (double y : agent.double_q_target(batch)) CHECK(y == 0.0);
}

TEST_CASE("double_q_target: equals the vanilla max target when targets are synced") {
    PdqnAgent agent = make_agent(19);
    Rng rng(20);
    // perturb the online nets, then re-sync so target == online
    for (auto& p : agent.mutable_critic().parameters()) p += rng.uniform(-0.01, 0.01);
    agent.sync_targets();
    for (int trial = 0; trial < 100; ++trial) {
        Transition t = make_transition(rng, false);
        const auto y = agent.double_q_target({t});
        // vanilla max target with the online networks
        const auto x = agent.continuous_params(t.s_next);
        std::vector<double> in(t.s_next.begin(), t.s_next.end());
        in.push_back(x[0]);
        in.push_back(x[1]);
        const auto q = agent.critic().forward(in);
        double maxq = q[0];
        for (double v : q) maxq = std::max(maxq, v);
        CHECK(y[0] == t.r + agent.rl_config().gamma * maxq);
    }
}

TEST_CASE("double_q_target: worked arithmetic example") {
    PdqnAgent agent = make_agent(21);
    zero_actor(agent);
    rig_constant_critic(agent, {0, 0, 0, 0, 0});
    agent.sync_targets();
    // selection: all heads equal -> k*=0; rig the target critic head 0 to 2
    rig_constant_critic(agent, {1, 0, 0, 0, 0});  // online picks head 0
    auto& tp = const_cast<Mlp&>(agent.target_critic()).parameters();
    tp[tp.size() - 5] = 2.0;
    Rng rng(22);
    Transition t = make_transition(rng, false);
    t.r = 1.0;
    const auto y = agent.double_q_target({t});
    CHECK(y[0] == doctest::Approx(1.0 + 0.995 * 2.0));
}

TEST_CASE("update: refuses to run below the warm-up threshold") {
    PdqnAgent agent = make_agent(23);
    ReplayBuffer buf(100);
    Rng rng(24);
    for (int i = 0; i < 7; ++i) buf.push(make_transition(rng, false));
    CHECK_FALSE(agent.update(buf, rng).has_value());
    buf.push(make_transition(rng, false));
    CHECK(agent.update(buf, rng).has_value());
}

TEST_CASE("update: perfect critic has zero loss") {
    PdqnAgent agent = make_agent(25);
    rig_constant_critic(agent, {0, 0, 0, 0, 0});
    agent.sync_targets();
    ReplayBuffer buf(100);
    Rng rng(26);
    for (int i = 0; i < 16; ++i) {
        Transition t = make_transition(rng, true);
        t.r = 0.0;  // y = 0 everywhere; Q = 0 everywhere
        buf.push(t);
    }
    const auto stats = agent.update(buf, rng);
    REQUIRE(stats.has_value());
    CHECK(stats->critic_loss == 0.0);
}

TEST_CASE("update: critic loss falls when overfitting a frozen batch") {
    RlConfig rl = small_rl();
    rl.lr_critic = 3e-3;
    rl.lr_actor = 0.0;  // isolate the critic
    PdqnAgent agent = make_agent(27, rl);
    ReplayBuffer buf(64);
    Rng rng(28);
    for (int i = 0; i < 32; ++i) buf.push(make_transition(rng, true));  // fixed targets
    double first = 0.0, last = 0.0;
    for (int it = 0; it < 500; ++it) {
        const auto stats = agent.update(buf, rng);
        REQUIRE(stats.has_value());
        if (it == 0) first = stats->critic_loss;
        last = stats->critic_loss;
    }
    CHECK(last < first * 0.5);
}

TEST_CASE("update: gradient step counter and hard sync cadence") {
    RlConfig rl = small_rl();
    rl.sync_period = 5;
    PdqnAgent agent = make_agent(29, rl);
    ReplayBuffer buf(64);
    Rng rng(30);
    for (int i = 0; i < 16; ++i) buf.push(make_transition(rng, false));
    for (int it = 1; it <= 11; ++it) {
        const auto stats = agent.update(buf, rng);
        REQUIRE(stats.has_value());
        CHECK(agent.gradient_steps() == it);
        CHECK(stats->synced == (it % 5 == 0));
        if (stats->synced) {
            CHECK(agent.target_critic() == agent.critic());
            CHECK(agent.target_actor() == agent.actor());
        }
        if (it == 3) {
            // between syncs the online nets have drifted away
            CHECK_FALSE(agent.target_critic() == agent.critic());
        }
    }
}

TEST_CASE("sync_targets: exact copy and idempotence") {
    PdqnAgent agent = make_agent(31);
    Rng rng(32);
    for (auto& p : agent.mutable_critic().parameters()) p += rng.uniform(-0.1, 0.1);
    CHECK_FALSE(agent.target_critic() == agent.critic());
    agent.sync_targets();
    CHECK(agent.target_critic() == agent.critic());
    CHECK(agent.target_actor() == agent.actor());
    const Mlp before = agent.target_critic();
    agent.sync_targets();
    CHECK(agent.target_critic() == before);
    // post-sync, target forward equals online forward on any input
    const Observation s = random_obs(rng);
    const auto x = agent.continuous_params(s);
    std::vector<double> in(s.begin(), s.end());
    in.push_back(x[0]);
    in.push_back(x[1]);
    CHECK(agent.critic().forward(in) == agent.target_critic().forward(in));
}

TEST_CASE("epsilon schedule") {
    PdqnAgent agent = make_agent(33);
    CHECK(agent.epsilon_now(0) == 1.0);
    const double expected = std::exp(100000.0 * std::log(0.999985));
    CHECK(agent.epsilon_now(100000) == doctest::Approx(expected).epsilon(1e-9));
    CHECK(agent.epsilon_now(100000) == doctest::Approx(0.2231).epsilon(1e-3));
    CHECK(agent.epsilon_now(10'000'000) == 0.01);
}

TEST_CASE("actor step does not decrease the frozen-critic objective") {
    Rng seed_rng(34);
    int improved = 0;
    for (int net = 0; net < 10; ++net) {
        RlConfig rl;
        rl.hidden = {12, 12};
        rl.batch_size = 8;
        rl.warmup_transitions = 8;
        rl.lr_critic = 0.0;  // freeze the critic: phi unchanged by its Adam step
        PdqnAgent agent = make_agent(seed_rng.next_u64(), rl);
        ReplayBuffer buf(32);
        Rng rng(seed_rng.next_u64());
        for (int i = 0; i < 16; ++i) buf.push(make_transition(rng, false));

        const auto objective = [&](const PdqnAgent& a) {
            double total = 0.0;
            for (std::size_t i = 0; i < buf.size(); ++i) {
                const auto& t = buf.at(i);
                const auto x = a.continuous_params(t.s);
                std::vector<double> in(t.s.begin(), t.s.end());
                in.push_back(x[0]);
                in.push_back(x[1]);
                for (double q : a.critic().forward(in)) total += q;
            }
            return total / static_cast<double>(buf.size());
        };
        const double before = objective(agent);
        Rng update_rng(99);
        agent.update(buf, update_rng);
        const double after = objective(agent);
        if (after >= before - 1e-6) ++improved;
    }
    CHECK(improved == 10);
}

TEST_CASE("checkpoint: save/load round-trips the whole agent") {
    PdqnAgent agent = make_agent(35);
    ReplayBuffer buf(64);
    Rng rng(36);
    for (int i = 0; i < 16; ++i) buf.push(make_transition(rng, false));
    for (int i = 0; i < 3; ++i) agent.update(buf, rng);

    std::stringstream ss;
    agent.save(ss);
    PdqnAgent loaded = PdqnAgent::load(ss);
    CHECK(loaded.critic() == agent.critic());
    CHECK(loaded.actor() == agent.actor());
    CHECK(loaded.target_critic() == agent.target_critic());
    CHECK(loaded.target_actor() == agent.target_actor());
    CHECK(loaded.gradient_steps() == agent.gradient_steps());

    // identical behavior after reload
    Rng r1(40), r2(40);
    const Observation s = random_obs(rng);
    const auto a1 = agent.select_action(s, 0.25, r1);
    const auto a2 = loaded.select_action(s, 0.25, r2);
    CHECK(a1 == a2);
}

TEST_CASE("checkpoint: rejects malformed streams") {
    std::stringstream ss;
    ss << "not a checkpoint";
    CHECK_THROWS(PdqnAgent::load(ss));
}
