#include "awareplan/belief.hpp"
#include "awareplan/prediction.hpp"

#include <doctest.h>

#include <random>

using namespace awareplan;

TEST_CASE("project_action") {
    const auto set = make_lattice_action_set(0.5);
    CHECK(project_action(Vec2(0.9, 0.1), set) == AgentAction(1, 0));
    CHECK(project_action(Vec2(0.5, -0.5), set) == AgentAction(0.5, -0.5));
    CHECK(project_action(Vec2(0.25, 0), set) == AgentAction(0, 0));
    CHECK(project_action(Vec2(-0.25, -0.25), set) == AgentAction(0, 0));
    CHECK(project_action(Vec2(7, -7), set) == AgentAction(1, -1));
    CHECK_THROWS_AS(project_action(Vec2(0, 0), ActionSequence{}), ConfigError);
}

TEST_CASE("Bayes arithmetic") {
    auto r = update_with_likelihoods(Belief{0.5}, 0.52, 0.02);
    CHECK(r.posterior.p_concerned == doctest::Approx(0.26 / 0.27).epsilon(1e-14));
    CHECK(!r.degenerate);
    CHECK(update_with_likelihoods(Belief{0.37}, 0.04, 0.04).posterior.p_concerned == 0.37);
    auto z = update_with_likelihoods(Belief{0.37}, 0.0, 0.0);
    CHECK(z.degenerate);
    CHECK(z.posterior.p_concerned == 0.37);
    CHECK(update_with_likelihoods(Belief{0.5}, 1.0, 0.0).posterior.p_concerned == 1.0 - kBeliefFloor);
}

TEST_CASE("posterior is scale invariant and bounded (randomized)") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 500; ++i) {
        const Belief prior{u(rng)};
        const double l1 = u(rng), l0 = u(rng), s = 0.01 + 10 * u(rng);
        const double a = update_with_likelihoods(prior, l1, l0).posterior.p_concerned;
        const double b = update_with_likelihoods(prior, s * l1, s * l0).posterior.p_concerned;
        CHECK(a >= 0.0);
        CHECK(a <= 1.0);
        CHECK(a == doctest::Approx(b).epsilon(1e-12));
    }
}

TEST_CASE("likelihoods and degenerate updates from the model") {
    const KinematicModel m(0.5);
    HumanParams p;
    p.goal = Vec2(5, 0);
    p.horizon = 1;
    p.action_set = make_lattice_action_set(0.5);
    const Trajectory far(2, AgentState(0, -100));
    // Far robot: both awareness levels pick [1, 0].
    CHECK(likelihood(AgentAction(1, 0), AgentState(-5, 0), far, 1, p, m, 0.5) == doctest::Approx(0.52));
    CHECK(likelihood(AgentAction(0, 0), AgentState(-5, 0), far, 1, p, m, 0.5) == doctest::Approx(0.02));
    CHECK(likelihood(AgentAction(0, 0), AgentState(-5, 0), far, 0, p, m, 1.0) == doctest::Approx(0.04));
    const auto same = update(Belief{0.5}, AgentAction(1, 0), AgentState(-5, 0), far, p, m, 0.5);
    CHECK(same.posterior.p_concerned == 0.5);
    for (const auto& a : p.action_set) {
        const auto r = update(Belief{0.3}, a, AgentState(-1, 0), Trajectory(2, AgentState(0, 0)), p, m, 1.0);
        CHECK(r.posterior.p_concerned == 0.3);
    }
    CHECK_THROWS_AS(likelihood(AgentAction(0.3, 0), AgentState(-5, 0), far, 1, p, m, 0.5), PreconditionError);
}

TEST_CASE("informative observations multiply the odds by 26") {
    Belief b{0.5};
    int steps = 0;
    while (b.p_concerned < 0.95) {
        b = update_with_likelihoods(b, 0.52, 0.02).posterior;
        ++steps;
    }
    CHECK(steps == 1);
    b = Belief{0.5};
    b = update_with_likelihoods(b, 0.02, 0.52).posterior;
    CHECK(b.p_concerned == doctest::Approx(1.0 / 27));
}
