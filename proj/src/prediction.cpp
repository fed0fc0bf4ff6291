#include "awareplan/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace awareplan {

Grid::Grid(const Vec2& origin, double cell_size, int nx, int ny)
    : origin_(origin), cell_size_(cell_size), nx_(nx), ny_(ny) {
    if (!(cell_size > 0.0) || !std::isfinite(cell_size)) {
        throw ConfigError("grid: cell_size must be positive");
    }
    if (nx <= 0 || ny <= 0) {
        throw ConfigError("grid: nx and ny must be positive");
    }
    if (!is_finite(origin)) {
        throw ConfigError("grid: origin must be finite");
    }
}

Grid Grid::centered(double half_extent, double cell_size) {
    if (!(cell_size > 0.0)) {
        throw ConfigError("grid: cell_size must be positive");
    }
    const int k = static_cast<int>(std::ceil(half_extent / cell_size - 1e-9));
    const double o = -(k + 0.5) * cell_size;
    return Grid(Vec2(o, o), cell_size, 2 * k + 1, 2 * k + 1);
}

bool Grid::contains(const Vec2& p) const {
    const Vec2 hi = upper();
    return p.x() >= origin_.x() && p.y() >= origin_.y() && p.x() < hi.x() && p.y() < hi.y();
}

CellIndex Grid::cell_of(const Vec2& p) const {
    if (!contains(p)) {
        throw OutOfBoundsError("position (" + std::to_string(p.x()) + ", " + std::to_string(p.y()) +
                               ") is outside the grid");
    }
    CellIndex c{static_cast<int>(std::floor((p.x() - origin_.x()) / cell_size_)),
                static_cast<int>(std::floor((p.y() - origin_.y()) / cell_size_))};
    // Guard against a quotient rounding up to n just below the upper edge.
    c.ix = std::min(c.ix, nx_ - 1);
    c.iy = std::min(c.iy, ny_ - 1);
    return c;
}

CellIndex Grid::clamped_cell_of(const Vec2& p) const {
    const double fx = std::floor((p.x() - origin_.x()) / cell_size_);
    const double fy = std::floor((p.y() - origin_.y()) / cell_size_);
    return {static_cast<int>(std::clamp(fx, 0.0, static_cast<double>(nx_ - 1))),
            static_cast<int>(std::clamp(fy, 0.0, static_cast<double>(ny_ - 1)))};
}

Vec2 Grid::center(const CellIndex& c) const {
    return origin_ + Vec2((c.ix + 0.5) * cell_size_, (c.iy + 0.5) * cell_size_);
}

double ActionDistribution::sum() const {
    double s = 0.0;
    for (double p : probabilities) {
        s += p;
    }
    return s;
}

std::size_t ActionDistribution::support_size() const {
    return static_cast<std::size_t>(
        std::count_if(probabilities.begin(), probabilities.end(), [](double p) { return p > 0.0; }));
}

StateDistribution StateDistribution::delta(int cell) {
    StateDistribution d;
    d.cells_[cell] = 1.0;
    return d;
}

void StateDistribution::add(int cell, double mass) { cells_[cell] += mass; }

double StateDistribution::mass(int cell) const {
    const auto it = cells_.find(cell);
    return it == cells_.end() ? 0.0 : it->second;
}

double StateDistribution::remove(int cell) {
    const auto it = cells_.find(cell);
    if (it == cells_.end()) {
        return 0.0;
    }
    const double m = it->second;
    cells_.erase(it);
    return m;
}

double StateDistribution::total() const {
    double s = 0.0;
    for (const auto& [cell, m] : cells_) {
        s += m;
    }
    return s;
}

void StateDistribution::drop_below(double threshold) {
    std::erase_if(cells_, [threshold](const auto& kv) { return kv.second < threshold; });
}

ActionDistribution deliberate_distribution(const AgentState& x_h,
                                           std::span<const AgentState> robot_traj, int beta,
                                           const HumanParams& params, const KinematicModel& model) {
    const HumanPlan plan = solve_human_plan(x_h, robot_traj, params.with_beta(beta), model);
    ActionDistribution d;
    d.probabilities.assign(params.action_set.size(), 0.0);
    d.probabilities[plan.action_indices.front()] = 1.0;
    return d;
}

ActionDistribution random_distribution(std::span<const AgentAction> action_set) {
    if (action_set.empty()) {
        throw ConfigError("random_distribution: empty action set");
    }
    ActionDistribution d;
    d.probabilities.assign(action_set.size(), 1.0 / static_cast<double>(action_set.size()));
    return d;
}

ActionDistribution mixture_distribution(const AgentState& x_h,
                                        std::span<const AgentState> robot_traj, int beta,
                                        const HumanParams& params, const KinematicModel& model,
                                        double omega_h) {
    if (!(omega_h >= 0.0 && omega_h <= 1.0)) {
        throw PreconditionError("mixture weight must lie in [0, 1]");
    }
    const ActionDistribution uniform = random_distribution(params.action_set);
    ActionDistribution out;
    out.probabilities.assign(params.action_set.size(), 0.0);
    if (omega_h < 1.0) {
        const ActionDistribution deliberate =
            deliberate_distribution(x_h, robot_traj, beta, params, model);
        for (std::size_t i = 0; i < out.probabilities.size(); ++i) {
            out.probabilities[i] = (1.0 - omega_h) * deliberate[i] + omega_h * uniform[i];
        }
    } else {
        out.probabilities = uniform.probabilities;
    }
    return out;
}

Trajectory replica_robot_forecast(std::span<const AgentState> robot_traj,
                                  const AgentAction& u_r_last, int j, const HumanParams& params,
                                  const KinematicModel& model) {
    const AgentAction vel =
        j == 0 ? u_r_last
               : AgentAction((robot_traj[j].position - robot_traj[j - 1].position) / model.dt());
    return predict_robot_trajectory(robot_traj[j], vel, params.effective_horizon(),
                                    params.effective_robot_model(), model, robot_traj.subspan(j));
}

PredictionStack propagate(const StateDistribution& dist0, std::span<const AgentState> robot_traj,
                          const AgentAction& u_r_last, const Belief& belief,
                          const HumanParams& params, const Grid& grid, const KinematicModel& model,
                          int horizon, const PredictionSettings& settings) {
    if (std::abs(dist0.total() - 1.0) > 1e-9) {
        throw PreconditionError("propagate: initial distribution is not normalized");
    }
    if (horizon < 1) {
        throw PreconditionError("propagate: horizon must be >= 1");
    }
    if (static_cast<int>(robot_traj.size()) < horizon + 1) {
        throw DimensionError("propagate: robot trajectory shorter than horizon + 1");
    }
    if (!(settings.omega_h >= 0.0 && settings.omega_h <= 1.0)) {
        throw PreconditionError("propagate: mixture weight must lie in [0, 1]");
    }
    const auto& set = params.action_set;
    const double n_actions = static_cast<double>(set.size());
    const double uniform = settings.omega_h / n_actions;
    const double deliberate = 1.0 - settings.omega_h;

    // Landing cell of every (cell, action) pair is fixed; cache per source cell.
    std::vector<std::vector<int>> landing;

    PredictionStack stack;
    stack.steps.reserve(horizon);
    StateDistribution current = dist0;
    for (int j = 0; j < horizon; ++j) {
        std::vector<int> cells;
        std::vector<Vec2> centers;
        cells.reserve(current.support_size());
        for (const auto& [cell, m] : current.cells()) {
            cells.push_back(cell);
            centers.push_back(grid.center(cell));
        }
        landing.assign(cells.size(), {});
        for (std::size_t c = 0; c < cells.size(); ++c) {
            landing[c].resize(set.size());
            for (std::size_t a = 0; a < set.size(); ++a) {
                landing[c][a] = grid.linear(
                    grid.clamped_cell_of(step(AgentState(centers[c]), set[a], model).position));
            }
        }

        StateDistribution next;
        const Trajectory forecast = replica_robot_forecast(robot_traj, u_r_last, j, params, model);
        for (int beta = 0; beta <= 1; ++beta) {
            const double w_beta = belief.weight(beta);
            if (w_beta <= 0.0) {
                continue;
            }
            std::vector<int> chosen(cells.size(), -1);
            if (deliberate > 0.0) {
                const auto plans =
                    solve_human_plans(centers, forecast, params.with_beta(beta), model);
                for (std::size_t c = 0; c < cells.size(); ++c) {
                    chosen[c] = plans[c].action_indices.front();
                }
            }
            for (std::size_t c = 0; c < cells.size(); ++c) {
                const double w = current.mass(cells[c]) * w_beta;
                for (std::size_t a = 0; a < set.size(); ++a) {
                    const double p =
                        uniform + (static_cast<int>(a) == chosen[c] ? deliberate : 0.0);
                    if (p > 0.0) {
                        next.add(landing[c][a], w * p);
                    }
                }
            }
        }
        next.drop_below(settings.support_threshold);

        PredictionStep out;
        const Vec2 robot_pos = robot_traj[j + 1].position;
        int robot_cell = -1;
        if (grid.contains(robot_pos)) {
            robot_cell = grid.linear(grid.cell_of(robot_pos));
            out.collision_probability = next.mass(robot_cell);
        }
        for (const auto& [cell, m] : next.cells()) {
            if (m >= settings.p_th) {
                out.forbidden.push_back(cell);
            }
        }
        current = next;
        if (settings.prune_collisions && robot_cell >= 0) {
            current.remove(robot_cell);
        }
        out.distribution = std::move(next);
        stack.steps.push_back(std::move(out));
    }
    return stack;
}

double collision_probability(const StateDistribution& dist, const Vec2& robot_pos, const Grid& grid) {
    return dist.mass(grid.linear(grid.cell_of(robot_pos)));
}

}  // namespace awareplan
