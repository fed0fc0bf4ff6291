#pragma once

#include "awareplan/kinematics.hpp"
#include "awareplan/types.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace awareplan {

/// How the human (and the robot's replica of the human) extrapolates the robot.
enum class RobotModel { ConstantVelocity, OraclePlan, Frozen };

std::string to_string(RobotModel m);
RobotModel robot_model_from_string(const std::string& s);

/// Parameters of the goal/effort/safety objective the human minimizes over a
/// discrete action set. A horizon of 0 denotes the non-anticipatory human: a
/// one-step greedy choice against a robot frozen in place.
struct HumanParams {
    Vec2 goal = Vec2(5.0, 0.0);
    Mat2 theta1 = Mat2::Identity();
    Mat2 theta2 = Mat2::Identity();
    double theta3 = 2.5;
    double theta4 = 8e-3;
    int beta = 1;
    int horizon = 5;
    ActionSequence action_set;
    double dist_noise_std = 0.0;
    RobotModel robot_model = RobotModel::ConstantVelocity;

    void validate() const;

    int effective_horizon() const { return horizon == 0 ? 1 : horizon; }
    RobotModel effective_robot_model() const {
        return horizon == 0 ? RobotModel::Frozen : robot_model;
    }
    HumanParams with_beta(int b) const {
        HumanParams p = *this;
        p.beta = b;
        return p;
    }

    bool operator==(const HumanParams&) const = default;
};

/// {-2v, -v, 0, v, 2v}^2 ordered x-major, then y.
ActionSequence make_lattice_action_set(double nominal_speed);

/// Index of `a` in `set` by exact comparison, or -1.
int index_of(std::span<const AgentAction> set, const AgentAction& a);

struct HumanPlan {
    ActionSequence actions;
    std::vector<int> action_indices;
    Trajectory predicted_states;
    double cost = 0.0;
};

/// Robot states 0..horizon as the human anticipates them.
Trajectory predict_robot_trajectory(const AgentState& x_r, const AgentAction& u_r_last, int horizon,
                                    RobotModel mode, const KinematicModel& model,
                                    std::span<const AgentState> oracle_plan = {});

/// Objective value of an action sequence. Stage k pairs action k with the
/// state it produces, x_H(k+1), and with robot_traj[k+1]; noise[k] perturbs
/// the perceived distance at that stage. An empty `noise` means zeros.
double human_cost(std::span<const AgentAction> actions, const AgentState& x_h0,
                  std::span<const AgentState> robot_traj, const HumanParams& params,
                  const KinematicModel& model, std::span<const double> noise = {});

/// Exact argmin of human_cost over action_set^horizon. Ties resolve to the
/// lexicographically smallest sequence of action indices.
HumanPlan solve_human_plan(const AgentState& x_h, std::span<const AgentState> robot_traj,
                           const HumanParams& params, const KinematicModel& model,
                           std::span<const double> noise = {});

/// Solves many start positions against the same robot trajectory. Results are
/// identical to calling solve_human_plan per start; starts on a common action
/// lattice share one cost-to-go table.
std::vector<HumanPlan> solve_human_plans(std::span<const Vec2> starts,
                                         std::span<const AgentState> robot_traj,
                                         const HumanParams& params, const KinematicModel& model,
                                         std::span<const double> noise = {});

/// Receding-horizon decision of the simulated human: first action of the plan
/// solved against its own forecast of the robot, with seeded distance noise.
AgentAction act(const AgentState& x_h, const AgentState& x_r, const AgentAction& u_r_last,
                const HumanParams& params, const KinematicModel& model, std::uint64_t seed,
                std::span<const AgentState> oracle_plan = {});

}  // namespace awareplan
