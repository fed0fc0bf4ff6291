#pragma once

#include "awareplan/belief.hpp"
#include "awareplan/human_agent.hpp"
#include "awareplan/kinematics.hpp"

#include <map>
#include <span>
#include <vector>

namespace awareplan {

struct CellIndex {
    int ix = 0;
    int iy = 0;

    bool operator==(const CellIndex&) const = default;
};

/// Uniform square tiling of the human's workspace. Cell (i, j) is the
/// half-open square [origin + (i, j) * s, origin + (i + 1, j + 1) * s).
class Grid {
public:
    Grid(const Vec2& origin, double cell_size, int nx, int ny);

    /// Grid whose cell centers sit on multiples of `cell_size` and which covers
    /// [-half_extent, half_extent]^2.
    static Grid centered(double half_extent, double cell_size);

    const Vec2& origin() const { return origin_; }
    double cell_size() const { return cell_size_; }
    int nx() const { return nx_; }
    int ny() const { return ny_; }
    int cell_count() const { return nx_ * ny_; }
    Vec2 upper() const { return origin_ + Vec2(nx_ * cell_size_, ny_ * cell_size_); }

    bool contains(const Vec2& p) const;
    CellIndex cell_of(const Vec2& p) const;
    CellIndex clamped_cell_of(const Vec2& p) const;
    int linear(const CellIndex& c) const { return c.iy * nx_ + c.ix; }
    CellIndex unlinear(int id) const { return {id % nx_, id / nx_}; }
    Vec2 center(const CellIndex& c) const;
    Vec2 center(int id) const { return center(unlinear(id)); }

    bool operator==(const Grid&) const = default;

private:
    Vec2 origin_;
    double cell_size_;
    int nx_;
    int ny_;
};

/// Probabilities aligned with the human action set.
struct ActionDistribution {
    std::vector<double> probabilities;

    double sum() const;
    double operator[](std::size_t i) const { return probabilities[i]; }
    std::size_t support_size() const;
};

/// Sparse per-cell mass keyed by linear cell id (ordered for reproducible sums).
class StateDistribution {
public:
    StateDistribution() = default;
    static StateDistribution delta(int cell);

    void add(int cell, double mass);
    double mass(int cell) const;
    double remove(int cell);
    double total() const;
    std::size_t support_size() const { return cells_.size(); }
    void drop_below(double threshold);
    const std::map<int, double>& cells() const { return cells_; }

private:
    std::map<int, double> cells_;
};

struct PredictionStep {
    StateDistribution distribution;  // before collision pruning at this step
    double collision_probability = 0.0;
    std::vector<int> forbidden;  // cells with mass >= p_th
};

/// Predictions for steps 1..N_R of the current horizon.
struct PredictionStack {
    std::vector<PredictionStep> steps;
};

struct PredictionSettings {
    double omega_h = 0.5;
    double p_th = 0.05;
    bool prune_collisions = true;
    double support_threshold = 1e-12;
};

ActionDistribution deliberate_distribution(const AgentState& x_h,
                                           std::span<const AgentState> robot_traj, int beta,
                                           const HumanParams& params, const KinematicModel& model);
ActionDistribution random_distribution(std::span<const AgentAction> action_set);
ActionDistribution mixture_distribution(const AgentState& x_h,
                                        std::span<const AgentState> robot_traj, int beta,
                                        const HumanParams& params, const KinematicModel& model,
                                        double omega_h);

/// The robot trajectory as the human sees it from prediction step `j` of
/// `robot_traj` (the robot's own forecast, states 0..N). The velocity at j is
/// `u_r_last` for j = 0 and the finite difference of the forecast otherwise.
Trajectory replica_robot_forecast(std::span<const AgentState> robot_traj,
                                  const AgentAction& u_r_last, int j, const HumanParams& params,
                                  const KinematicModel& model);

/// Pushes `dist0` through the belief-weighted mixture action model and the
/// dynamics for `horizon` steps. Deliberate actions are re-solved at every
/// support cell center.
PredictionStack propagate(const StateDistribution& dist0, std::span<const AgentState> robot_traj,
                          const AgentAction& u_r_last, const Belief& belief,
                          const HumanParams& params, const Grid& grid, const KinematicModel& model,
                          int horizon, const PredictionSettings& settings);

double collision_probability(const StateDistribution& dist, const Vec2& robot_pos, const Grid& grid);

}  // namespace awareplan
