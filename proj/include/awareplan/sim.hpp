#pragma once

#include "awareplan/belief.hpp"
#include "awareplan/human_agent.hpp"
#include "awareplan/prediction.hpp"
#include "awareplan/robot_planner.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace awareplan {

enum class HumanControl { Scripted, External };

std::string to_string(HumanControl c);
HumanControl human_control_from_string(const std::string& s);

struct ScenarioConfig {
    std::string name = "custom";
    double dt = 0.5;
    Grid grid = Grid::centered(12.0, 0.25);

    HumanParams human;  // human.beta is the simulated human's true awareness
    bool human_present = true;
    AgentState human_start{-5.0, 0.0};

    RobotParams robot;
    AgentState robot_start{0.0, -10.0};

    double omega_h = 0.5;
    double prior = 0.5;
    int max_steps = 200;
    double goal_tolerance = 0.15;
    std::uint64_t seed = 0;
    HumanControl human_control = HumanControl::Scripted;
    bool prune_collisions = true;

    void validate() const;
    KinematicModel model() const { return KinematicModel(dt); }

    bool operator==(const ScenarioConfig&) const = default;
};

struct PerformanceIndices {
    double robot = 0.0;  // PI_R
    double human = 0.0;  // PI_H
    double total = 0.0;  // PI_T
};

/// One control tick. States are at time t, actions are those applied at t.
struct StepRecord {
    int t = 0;
    AgentState robot;
    AgentState human;
    AgentAction robot_action;
    AgentAction human_action;

    // Belief after folding in the observation of u_H(t - 1).
    double belief = 0.5;
    std::optional<AgentAction> observed;  // u_H(t - 1) as projected onto U_H
    bool informative = false;             // the two awareness levels disagreed
    bool belief_degenerate = false;

    PredictionStack prediction;  // empty without a human
    RobotPlan plan;
    bool plan_checked = false;  // plan passes constraint_check against this tick's forbidden sets
    double wall_ms = 0.0;
};

struct SimTrace {
    ScenarioConfig config;
    std::vector<StepRecord> steps;
    Trajectory robot_states;  // x_R(0..T)
    Trajectory human_states;  // x_H(0..T); empty without a human
    bool reached_goals = false;
    PerformanceIndices indices;
};

/// PI = sum over the series of squared distance to the goal.
double performance_index(std::span<const AgentState> states, const Vec2& goal);
PerformanceIndices performance_indices(const SimTrace& trace);

double min_separation(const SimTrace& trace);
/// Ticks (including the final state) where both agents sit in the same grid cell.
int shared_cell_count(const SimTrace& trace);
/// Mean over ticks and prediction steps of the support cell count.
double mean_support_width(const SimTrace& trace);

/// Closed-loop engine. One tick: fold the previous human action into the
/// belief, predict the human against the robot's lagged plan, plan, then apply
/// both first actions simultaneously.
class Simulation {
public:
    explicit Simulation(ScenarioConfig config);

    const ScenarioConfig& config() const { return config_; }
    void reset(std::optional<std::uint64_t> seed = std::nullopt);

    /// Advances one tick. `command` is the externally supplied human velocity
    /// (External mode); it is projected onto the action set, and a missing
    /// command means standing still. Ignored in Scripted mode.
    const StepRecord& tick(const std::optional<Vec2>& command = std::nullopt);

    bool done() const { return done_; }
    bool reached_goals() const { return reached_; }
    int tick_index() const { return t_; }
    const AgentState& robot_state() const { return x_r_; }
    const AgentState& human_state() const { return x_h_; }
    Belief belief() const { return belief_; }
    const std::vector<StepRecord>& records() const { return records_; }

    SimTrace trace() const;

private:
    Trajectory lagged_robot_plan() const;
    bool at_goals() const;

    ScenarioConfig config_;
    KinematicModel model_;
    std::mt19937_64 rng_;

    int t_ = 0;
    bool done_ = false;
    bool reached_ = false;
    AgentState x_r_;
    AgentState x_h_;
    AgentAction u_r_last_{0.0, 0.0};
    Belief belief_;
    std::optional<RobotPlan> prev_plan_;

    // What the human saw last tick, for the likelihood of its action.
    AgentState prev_x_h_;
    Trajectory prev_human_view_;
    std::optional<AgentAction> prev_u_h_;

    std::vector<StepRecord> records_;
    Trajectory robot_states_;
    Trajectory human_states_;
};

SimTrace run_closed_loop(const ScenarioConfig& config);

struct PredictionImpactReport {
    SimTrace non_predictive;
    SimTrace predictive;
    PerformanceIndices non_predictive_indices;
    PerformanceIndices predictive_indices;
    double non_predictive_width = 0.0;
    double predictive_width = 0.0;
    bool collision_free = false;
};

/// Same scenario with a non-anticipatory human (N_H = 0) and with N_H = N_R.
PredictionImpactReport experiment_prediction_impact(const ScenarioConfig& base, int horizon = 5);

struct SweepRow {
    int horizon = 0;
    bool predictive = false;
    PerformanceIndices raw;
    PerformanceIndices normalized;
    int steps = 0;
};

/// Rows for every horizon, non-predictive then predictive, normalized by the
/// non-predictive N_R = 1 run.
std::vector<SweepRow> experiment_horizon_sweep(const ScenarioConfig& base, const std::vector<int>& horizons);

struct AwarenessReport {
    int true_beta = 1;
    SimTrace trace;
    PerformanceIndices indices;
    std::vector<double> belief;
    double min_distance = 0.0;
};

AwarenessReport experiment_awareness(const ScenarioConfig& base, int true_beta);

}  // namespace awareplan
