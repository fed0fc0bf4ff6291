#pragma once

#include "awareplan/types.hpp"

#include <span>

namespace awareplan {

/// Single-integrator model x(t+1) = x(t) + dt * u(t), shared by human and robot.
class KinematicModel {
public:
    explicit KinematicModel(double dt = 0.5);

    double dt() const { return dt_; }

private:
    double dt_;
};

AgentState step(const AgentState& state, const AgentAction& action, const KinematicModel& model);

/// Returns |actions| + 1 states; element 0 is `state`.
Trajectory rollout(const AgentState& state, std::span<const AgentAction> actions,
                   const KinematicModel& model);

}  // namespace awareplan
