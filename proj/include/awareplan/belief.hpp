#pragma once

#include "awareplan/human_agent.hpp"

#include <span>

namespace awareplan {

/// Robot's posterior that the human is concerned, P(beta = 1).
struct Belief {
    double p_concerned = 0.5;

    double weight(int beta) const { return beta == 1 ? p_concerned : 1.0 - p_concerned; }
};

inline constexpr double kBeliefFloor = 1e-6;

struct BeliefUpdate {
    Belief posterior;
    bool degenerate = false;  // both likelihoods vanished; prior returned
};

/// Euclidean-nearest member of the action set; ties go to the smaller norm,
/// then to the smaller x, then the smaller y.
AgentAction project_action(const Vec2& observed_velocity, std::span<const AgentAction> action_set);

/// Mixture probability of `u_obs` at `x_h` under awareness `beta`.
double likelihood(const AgentAction& u_obs, const AgentState& x_h,
                  std::span<const AgentState> robot_traj, int beta, const HumanParams& params,
                  const KinematicModel& model, double omega_h);

/// Bayes' rule on the two-point awareness posterior given both likelihoods.
/// Equal likelihoods return the prior bit-for-bit; otherwise the result is
/// clamped to [kBeliefFloor, 1 - kBeliefFloor].
BeliefUpdate update_with_likelihoods(const Belief& prior, double l_concerned, double l_unconcerned);

BeliefUpdate update(const Belief& prior, const AgentAction& u_obs, const AgentState& x_h,
                    std::span<const AgentState> robot_traj, const HumanParams& params,
                    const KinematicModel& model, double omega_h);

}  // namespace awareplan
