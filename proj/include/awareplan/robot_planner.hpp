#pragma once

#include "awareplan/kinematics.hpp"
#include "awareplan/prediction.hpp"
#include "awareplan/types.hpp"

#include <optional>
#include <span>
#include <vector>

namespace awareplan {

/// Axis-aligned rectangle [lo, hi], used both for the input box and the arena.
struct Box2 {
    Vec2 lo = Vec2::Constant(-1.0);
    Vec2 hi = Vec2::Constant(1.0);

    bool contains(const Vec2& p, double tol = 0.0) const {
        return (p.array() >= lo.array() - tol).all() && (p.array() <= hi.array() + tol).all();
    }
    bool operator==(const Box2& o) const { return lo == o.lo && hi == o.hi; }
};

struct RobotParams {
    Vec2 goal = Vec2(0.0, 10.0);
    Mat2 theta5 = 100.0 * Mat2::Identity();
    Mat2 theta6 = 0.06 * Mat2::Identity();
    int horizon = 5;
    Box2 input_box{Vec2(-2.0, -2.0), Vec2(2.0, 2.0)};
    Box2 state_bounds{Vec2(-12.0, -12.0), Vec2(12.0, 12.0)};
    double p_th = 0.05;
    double buffer = 0.5;

    void validate() const;

    bool operator==(const RobotParams&) const = default;
};

struct RobotPlan {
    ActionSequence actions;
    Trajectory predicted_states;
    double cost = 0.0;
    bool feasible = false;
    double max_violation = 0.0;  // worst buffer shortfall (m) of an infeasible plan
};

using ForbiddenSets = std::vector<std::vector<int>>;

ForbiddenSets forbidden_sets(const PredictionStack& stack);

/// Every states[k + 1] keeps strictly more than buffer + cell_size / 2 from
/// the center of every cell in forbidden[k].
bool constraint_check(std::span<const AgentState> states, const ForbiddenSets& forbidden,
                      const Grid& grid, double buffer);

/// Goal and effort objective; state k = 1..N pairs with action k - 1.
double robot_cost(std::span<const AgentAction> actions, const AgentState& x_r,
                  const RobotParams& params, const KinematicModel& model);

/// Chance-constrained receding-horizon plan. When no feasible plan is found the
/// result minimizes the worst buffer violation and is flagged infeasible.
RobotPlan plan(const AgentState& x_r, const ForbiddenSets& forbidden, const Grid& grid,
               const RobotParams& params, const KinematicModel& model,
               const std::optional<RobotPlan>& warm_start = std::nullopt);

RobotPlan plan(const AgentState& x_r, const PredictionStack& stack, const Grid& grid,
               const RobotParams& params, const KinematicModel& model,
               const std::optional<RobotPlan>& warm_start = std::nullopt);

/// Previous plan advanced one step with its final action repeated.
ActionSequence shift_actions(const ActionSequence& actions, int horizon);

}  // namespace awareplan
