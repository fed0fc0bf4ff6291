#include "awareplan/belief.hpp"

#include "awareplan/prediction.hpp"

#include <algorithm>
#include <limits>

namespace awareplan {

AgentAction project_action(const Vec2& observed_velocity, std::span<const AgentAction> action_set) {
    if (action_set.empty()) {
        throw ConfigError("project_action: empty action set");
    }
    const AgentAction* best = nullptr;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& a : action_set) {
        const double d = (a.velocity - observed_velocity).squaredNorm();
        bool better = d < best_d;
        if (!better && d == best_d) {
            const double na = a.velocity.squaredNorm();
            const double nb = best->velocity.squaredNorm();
            better = na < nb ||
                     (na == nb && (a.velocity.x() < best->velocity.x() ||
                                   (a.velocity.x() == best->velocity.x() &&
                                    a.velocity.y() < best->velocity.y())));
        }
        if (better) {
            best = &a;
            best_d = d;
        }
    }
    return *best;
}

double likelihood(const AgentAction& u_obs, const AgentState& x_h,
                  std::span<const AgentState> robot_traj, int beta, const HumanParams& params,
                  const KinematicModel& model, double omega_h) {
    const int idx = index_of(params.action_set, u_obs);
    if (idx < 0) {
        throw PreconditionError("likelihood: observed action is not in the action set");
    }
    return mixture_distribution(x_h, robot_traj, beta, params, model, omega_h)[idx];
}

BeliefUpdate update_with_likelihoods(const Belief& prior, double l_concerned,
                                     double l_unconcerned) {
    if (l_concerned == l_unconcerned && l_concerned > 0.0) {
        return {prior, false};
    }
    const double p = prior.p_concerned;
    const double num = l_concerned * p;
    const double den = num + l_unconcerned * (1.0 - p);
    if (!(den > 0.0)) {
        return {prior, true};
    }
    Belief post{std::clamp(num / den, kBeliefFloor, 1.0 - kBeliefFloor)};
    return {post, false};
}

BeliefUpdate update(const Belief& prior, const AgentAction& u_obs, const AgentState& x_h,
                    std::span<const AgentState> robot_traj, const HumanParams& params,
                    const KinematicModel& model, double omega_h) {
    if (!(prior.p_concerned >= 0.0 && prior.p_concerned <= 1.0)) {
        throw PreconditionError("belief update: prior outside [0, 1]");
    }
    const double l1 = likelihood(u_obs, x_h, robot_traj, 1, params, model, omega_h);
    const double l0 = likelihood(u_obs, x_h, robot_traj, 0, params, model, omega_h);
    return update_with_likelihoods(prior, l1, l0);
}

}  // namespace awareplan
