#include "awareplan/kinematics.hpp"

#include <doctest.h>

#include <random>

using namespace awareplan;

TEST_CASE("step integrates velocity over dt") {
    const KinematicModel m(0.5);
    CHECK(step(AgentState(0, 0), AgentAction(1, -1), m) == AgentState(0.5, -0.5));
    CHECK(step(AgentState(2, 0), AgentAction(0, 0), m) == AgentState(2, 0));
    CHECK(step(AgentState(-5, 0), AgentAction(1, 0), m) == AgentState(-4.5, 0));
}

TEST_CASE("rollout") {
    const KinematicModel m(0.5);
    const ActionSequence a{AgentAction(1, 0), AgentAction(1, 0)};
    const Trajectory t = rollout(AgentState(0, 0), a, m);
    REQUIRE(t.size() == 3);
    CHECK(t[1] == AgentState(0.5, 0));
    CHECK(t[2] == AgentState(1, 0));

    const ActionSequence b{AgentAction(1, 0), AgentAction(0, 1)};
    const Trajectory u = rollout(AgentState(-5, 0), b, m);
    CHECK(u[2] == AgentState(-4.5, 0.5));

    const ActionSequence stay{AgentAction(0, 0)};
    CHECK(rollout(AgentState(0, 0), stay, m) == Trajectory{AgentState(0, 0), AgentState(0, 0)});

    CHECK_THROWS_AS(rollout(AgentState(0, 0), ActionSequence{}, m), EmptyHorizonError);
}

TEST_CASE("invalid dt") {
    CHECK_THROWS_AS(KinematicModel(0.0), ConfigError);
    CHECK_THROWS_AS(KinematicModel(-1.0), ConfigError);
}

TEST_CASE("step is affine (randomized)") {
    const KinematicModel m(0.5);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> d(-1e3, 1e3);
    for (int i = 0; i < 200; ++i) {
        const Vec2 a(d(rng), d(rng)), b(d(rng), d(rng)), u(d(rng), d(rng)), v(d(rng), d(rng));
        const Vec2 lhs = step(AgentState(a + b), AgentAction(u + v), m).position;
        const Vec2 rhs = step(AgentState(a), AgentAction(u), m).position +
                         step(AgentState(b), AgentAction(v), m).position -
                         step(AgentState(0, 0), AgentAction(0, 0), m).position;
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12 * 4e3);
    }
}

TEST_CASE("rollout prefix property (randomized)") {
    const KinematicModel m(0.5);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> d(-2, 2);
    for (int i = 0; i < 50; ++i) {
        ActionSequence a(1 + i % 7);
        for (auto& x : a) x = AgentAction(d(rng), d(rng));
        const AgentState s0(d(rng), d(rng));
        const Trajectory t = rollout(s0, a, m);
        REQUIRE(t.size() == a.size() + 1);
        CHECK(t[0] == s0);
        for (std::size_t k = 0; k < a.size(); ++k) CHECK(t[k + 1] == step(t[k], a[k], m));
    }
}
