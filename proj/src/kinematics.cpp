#include "awareplan/kinematics.hpp"

namespace awareplan {

KinematicModel::KinematicModel(double dt) : dt_(dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw ConfigError("kinematic model: dt must be positive and finite");
    }
}

AgentState step(const AgentState& state, const AgentAction& action, const KinematicModel& model) {
    return AgentState(state.position + model.dt() * action.velocity);
}

Trajectory rollout(const AgentState& state, std::span<const AgentAction> actions,
                   const KinematicModel& model) {
    if (actions.empty()) {
        throw EmptyHorizonError("rollout: empty action sequence");
    }
    Trajectory out;
    out.reserve(actions.size() + 1);
    out.push_back(state);
    for (const auto& a : actions) {
        out.push_back(step(out.back(), a, model));
    }
    return out;
}

}  // namespace awareplan
