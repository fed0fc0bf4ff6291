#include "awareplan/robot_planner.hpp"

#include "awareplan/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace awareplan {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxScpIterations = 10;
constexpr double kBufferMargin = 1e-7;
constexpr double kBoundsMargin = 1e-9;

struct Obstacle {
    int step;  // 1..N
    Vec2 center;
};

// Quadratic program data with the dynamics substituted out. Decision vector is
// z = [u_0; ...; u_{N-1}], optionally followed by one slack variable.
class ConvexSubproblem {
public:
    ConvexSubproblem(const AgentState& x_r, const RobotParams& params, const KinematicModel& model)
        : x0_(x_r.position), params_(params), dt_(model.dt()), n_(params.horizon) {
        const int nz = 2 * n_;
        H_ = Eigen::MatrixXd::Zero(nz, nz);
        f_ = Eigen::VectorXd::Zero(nz);
        const Vec2 e0 = x0_ - params.goal;
        for (int i = 0; i < n_; ++i) {
            for (int j = 0; j < n_; ++j) {
                const double count = n_ - std::max(i, j);
                H_.block<2, 2>(2 * i, 2 * j) = 2.0 * dt_ * dt_ * count * params.theta5;
            }
            H_.block<2, 2>(2 * i, 2 * i) += 2.0 * params.theta6;
            f_.segment<2>(2 * i) = 2.0 * dt_ * (n_ - i) * (params.theta5 * e0);
        }
        H_ += 1e-10 * Eigen::MatrixXd::Identity(nz, nz);
    }

    int horizon() const { return n_; }

    // Base rows: input box and arena bounds for states 1..N.
    void base_constraints(std::vector<Eigen::VectorXd>& rows, std::vector<double>& rhs,
                          int nvars) const {
        for (int j = 0; j < n_; ++j) {
            for (int a = 0; a < 2; ++a) {
                Eigen::VectorXd r = Eigen::VectorXd::Zero(nvars);
                r[2 * j + a] = 1.0;
                rows.push_back(r);
                rhs.push_back(params_.input_box.lo[a]);
                rows.push_back(-r);
                rhs.push_back(-params_.input_box.hi[a]);
            }
        }
        for (int k = 1; k <= n_; ++k) {
            for (int a = 0; a < 2; ++a) {
                Eigen::VectorXd r = Eigen::VectorXd::Zero(nvars);
                for (int j = 0; j < k; ++j) {
                    r[2 * j + a] = dt_;
                }
                rows.push_back(r);
                rhs.push_back(params_.state_bounds.lo[a] + kBoundsMargin - x0_[a]);
                rows.push_back(-r);
                rhs.push_back(x0_[a] - params_.state_bounds.hi[a] + kBoundsMargin);
            }
        }
    }

    // n' (x_k - c) >= radius, with x_k = x0 + dt * sum_{j<k} u_j.
    void halfspace(std::vector<Eigen::VectorXd>& rows, std::vector<double>& rhs, int nvars,
                   int k, const Vec2& normal, const Vec2& center, double radius,
                   int slack_index) const {
        Eigen::VectorXd r = Eigen::VectorXd::Zero(nvars);
        for (int j = 0; j < k; ++j) {
            r.segment<2>(2 * j) = dt_ * normal;
        }
        if (slack_index >= 0) {
            r[slack_index] = 1.0;
        }
        rows.push_back(r);
        rhs.push_back(radius - normal.dot(x0_ - center));
    }

    const Eigen::MatrixXd& H() const { return H_; }
    const Eigen::VectorXd& f() const { return f_; }
    const Vec2& x0() const { return x0_; }

private:
    Vec2 x0_;
    const RobotParams& params_;
    double dt_;
    int n_;
    Eigen::MatrixXd H_;
    Eigen::VectorXd f_;
};

Eigen::MatrixXd stack_rows(const std::vector<Eigen::VectorXd>& rows, int nvars) {
    Eigen::MatrixXd A(static_cast<Eigen::Index>(rows.size()), nvars);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        A.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    }
    return A;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

ActionSequence to_actions(const Eigen::VectorXd& z, int n, const Box2& box) {
    ActionSequence out;
    out.reserve(n);
    for (int j = 0; j < n; ++j) {
        Vec2 u = z.segment<2>(2 * j);
        u = u.cwiseMax(box.lo).cwiseMin(box.hi);
        out.emplace_back(u);
    }
    return out;
}

Vec2 outward_normal(const Vec2& at, const Vec2& center, const Vec2& fallback_from,
                    const Vec2& travel) {
    Vec2 v = at - center;
    if (v.norm() < 1e-9) {
        v = fallback_from - center;
    }
    if (v.norm() < 1e-9) {
        v = Vec2(-travel.y(), travel.x());
    }
    if (v.norm() < 1e-12) {
        v = Vec2(1.0, 0.0);
    }
    return v.normalized();
}

class Planner {
public:
    Planner(const AgentState& x_r, const ForbiddenSets& forbidden, const Grid& grid,
            const RobotParams& params, const KinematicModel& model)
        : x_r_(x_r), grid_(grid), params_(params), model_(model), sub_(x_r, params, model),
          radius_(params.buffer + 0.5 * grid.cell_size()) {
        const int n = params.horizon;
        const double reach = model.dt() * params.input_box.lo.cwiseAbs()
                                              .cwiseMax(params.input_box.hi.cwiseAbs())
                                              .norm();
        for (int k = 1; k <= n && k - 1 < static_cast<int>(forbidden.size()); ++k) {
            for (int cell : forbidden[k - 1]) {
                const Vec2 c = grid.center(cell);
                // Cells beyond reach cannot be violated at this step.
                if ((x_r.position - c).norm() <= k * reach + radius_ + 1e-6) {
                    obstacles_.push_back({k, c});
                }
            }
        }
        forbidden_ = forbidden;
        const Vec2 to_goal = params.goal - x_r.position;
        travel_ = to_goal.norm() > 1e-9 ? to_goal.normalized() : Vec2(0.0, 1.0);
    }

    RobotPlan solve(const std::optional<RobotPlan>& warm_start) {
        std::vector<ActionSequence> seeds;
        if (warm_start && !warm_start->actions.empty()) {
            ActionSequence w = shift_actions(warm_start->actions, params_.horizon);
            for (auto& a : w) {
                a.velocity = a.velocity.cwiseMax(params_.input_box.lo).cwiseMin(params_.input_box.hi);
            }
            seeds.push_back(std::move(w));
        }
        const auto unconstrained = solve_qp(Trajectory{}, radius_, false);
        if (unconstrained) {
            seeds.push_back(*unconstrained);
        }
        seeds.emplace_back(params_.horizon, AgentAction(0.0, 0.0));

        std::vector<Trajectory> linearizations;
        for (const auto& s : seeds) {
            linearizations.push_back(rollout(x_r_, s, model_));
        }
        if (unconstrained) {
            add_detour_seeds(rollout(x_r_, *unconstrained, model_), linearizations);
        }

        std::optional<RobotPlan> best;
        for (const auto& lin : linearizations) {
            auto candidate = run_scp(lin, radius_);
            if (candidate && (!best || candidate->cost < best->cost)) {
                best = std::move(candidate);
            }
        }
        if (best) {
            best->feasible = true;
            return *best;
        }
        return fallback();
    }

private:
    Trajectory actions_to_states(const ActionSequence& a) const { return rollout(x_r_, a, model_); }

    bool admissible(const RobotPlan& p) const {
        for (const auto& a : p.actions) {
            if (!params_.input_box.contains(a.velocity)) return false;
        }
        for (std::size_t k = 1; k < p.predicted_states.size(); ++k) {
            if (!params_.state_bounds.contains(p.predicted_states[k].position)) return false;
        }
        return constraint_check(p.predicted_states, forbidden_, grid_, params_.buffer);
    }

    double shortfall(const Trajectory& states, double radius) const {
        double worst = 0.0;
        for (const auto& o : obstacles_) {
            worst = std::max(worst, radius - (states[o.step].position - o.center).norm());
        }
        return worst;
    }

    RobotPlan make_plan(ActionSequence actions) const {
        RobotPlan p;
        p.predicted_states = actions_to_states(actions);
        p.cost = robot_cost(actions, x_r_, params_, model_);
        p.actions = std::move(actions);
        return p;
    }

    // Solves the convexified problem linearized at `lin` (empty: no buffer rows).
    std::optional<ActionSequence> solve_qp(const Trajectory& lin, double radius, bool with_buffers) const {
        const int nz = 2 * params_.horizon;
        std::vector<Eigen::VectorXd> rows;
        std::vector<double> rhs;
        sub_.base_constraints(rows, rhs, nz);
        if (with_buffers) {
            for (const auto& o : obstacles_) {
                const Vec2 n = outward_normal(lin[o.step].position, o.center, x_r_.position, travel_);
                sub_.halfspace(rows, rhs, nz, o.step, n, o.center, radius + kBufferMargin, -1);
            }
        }
        const auto res = qp::solve(sub_.H(), sub_.f(), stack_rows(rows, nz), to_vector(rhs));
        if (res.status != qp::Status::Optimal) {
            return std::nullopt;
        }
        return to_actions(res.x, params_.horizon, params_.input_box);
    }

    // Convex-concave iterations: each half-space inner-approximates the
    // exterior of its disc, so every QP solution is feasible for the original
    // problem and the cost is non-increasing from the first feasible iterate.
    std::optional<RobotPlan> run_scp(Trajectory lin, double radius) const {
        std::optional<RobotPlan> best;
        for (int it = 0; it < kMaxScpIterations; ++it) {
            const auto actions = solve_qp(lin, radius, true);
            if (!actions) {
                break;
            }
            RobotPlan p = make_plan(*actions);
            const bool ok = admissible(p);
            bool improved = false;
            if (ok && (!best || p.cost < best->cost - 1e-12)) {
                improved = true;
            }
            double move = 0.0;
            for (int k = 1; k <= params_.horizon; ++k) {
                move = std::max(move, (p.predicted_states[k].position - lin[k].position).norm());
            }
            lin = p.predicted_states;
            if (improved) {
                best = std::move(p);
            }
            if (move < 1e-9 || (ok && !improved)) {
                break;
            }
        }
        return best;
    }

    void add_detour_seeds(const Trajectory& straight, std::vector<Trajectory>& out) const {
        int blocked = -1;
        Vec2 blocking = Vec2::Zero();
        for (const auto& o : obstacles_) {
            if ((straight[o.step].position - o.center).norm() <= radius_ &&
                (blocked < 0 || o.step < blocked)) {
                blocked = o.step;
                blocking = o.center;
            }
        }
        if (blocked < 0) {
            return;
        }
        const Vec2 left(-travel_.y(), travel_.x());
        for (double side : {1.0, -1.0}) {
            Trajectory seed = straight;
            for (int k = blocked; k <= params_.horizon; ++k) {
                const double along = (straight[k].position - blocking).dot(left);
                seed[k].position += (side * (radius_ + grid_.cell_size()) - along) * left;
            }
            out.push_back(std::move(seed));
        }
    }

    // Feasibility-first: minimize the worst buffer shortfall, then re-optimize
    // cost with the buffer relaxed to the achieved level.
    RobotPlan fallback() const {
        const int nz = 2 * params_.horizon;
        const int nv = nz + 1;
        Eigen::MatrixXd G = 1e-6 * Eigen::MatrixXd::Identity(nv, nv);
        Eigen::VectorXd g = Eigen::VectorXd::Zero(nv);
        g[nz] = 1.0;

        std::optional<ActionSequence> best_actions;
        double best_short = kInf;
        const std::vector<ActionSequence> starts = {
            ActionSequence(params_.horizon, AgentAction(0.0, 0.0))};
        for (const auto& start : starts) {
            Trajectory lin = actions_to_states(start);
            for (int it = 0; it < kMaxScpIterations; ++it) {
                std::vector<Eigen::VectorXd> rows;
                std::vector<double> rhs;
                sub_.base_constraints(rows, rhs, nv);
                {
                    Eigen::VectorXd r = Eigen::VectorXd::Zero(nv);
                    r[nz] = 1.0;
                    rows.push_back(r);
                    rhs.push_back(0.0);
                }
                for (const auto& o : obstacles_) {
                    const Vec2 n =
                        outward_normal(lin[o.step].position, o.center, x_r_.position, travel_);
                    sub_.halfspace(rows, rhs, nv, o.step, n, o.center, radius_ + kBufferMargin, nz);
                }
                const auto res = qp::solve(G, g, stack_rows(rows, nv), to_vector(rhs));
                if (res.status != qp::Status::Optimal) {
                    break;
                }
                ActionSequence a = to_actions(res.x.head(nz), params_.horizon, params_.input_box);
                lin = actions_to_states(a);
                const double s = shortfall(lin, radius_);
                if (s < best_short - 1e-12) {
                    best_short = s;
                    best_actions = std::move(a);
                } else {
                    break;
                }
            }
        }
        if (!best_actions) {
            RobotPlan stop = make_plan(ActionSequence(params_.horizon, AgentAction(0.0, 0.0)));
            stop.feasible = false;
            stop.max_violation = shortfall(stop.predicted_states, radius_);
            return stop;
        }

        RobotPlan result = make_plan(*best_actions);
        const double relaxed = radius_ - best_short - 2.0 * kBufferMargin;
        if (relaxed > 0.0) {
            if (auto refined = run_scp_relaxed(result.predicted_states, relaxed)) {
                result = std::move(*refined);
            }
        }
        result.feasible = false;
        result.max_violation = std::max(0.0, shortfall(result.predicted_states, radius_));
        return result;
    }

    std::optional<RobotPlan> run_scp_relaxed(Trajectory lin, double radius) const {
        std::optional<RobotPlan> best;
        for (int it = 0; it < kMaxScpIterations; ++it) {
            const auto actions = solve_qp(lin, radius, true);
            if (!actions) {
                break;
            }
            RobotPlan p = make_plan(*actions);
            lin = p.predicted_states;
            if (shortfall(p.predicted_states, radius) > 1e-6) {
                break;
            }
            if (best && p.cost >= best->cost - 1e-12) {
                break;
            }
            best = std::move(p);
        }
        return best;
    }

    AgentState x_r_;
    const Grid& grid_;
    const RobotParams& params_;
    const KinematicModel& model_;
    ConvexSubproblem sub_;
    double radius_;
    std::vector<Obstacle> obstacles_;
    ForbiddenSets forbidden_;
    Vec2 travel_;
};

}  // namespace

void RobotParams::validate() const {
    if (!is_finite(goal)) throw ConfigError("robot.goal must be finite");
    if (!is_symmetric_psd(theta5)) throw ConfigError("robot.theta5 must be symmetric PSD");
    if (!is_symmetric_psd(theta6)) throw ConfigError("robot.theta6 must be symmetric PSD");
    if (horizon < 1) throw ConfigError("robot.horizon must be >= 1");
    if ((input_box.lo.array() > input_box.hi.array()).any()) {
        throw ConfigError("robot.input_box: lo must not exceed hi");
    }
    if ((state_bounds.lo.array() > state_bounds.hi.array()).any()) {
        throw ConfigError("robot.state_bounds: lo must not exceed hi");
    }
    if (!(p_th >= 0.0 && p_th <= 1.0)) throw ConfigError("robot.p_th must lie in [0, 1]");
    if (!(buffer >= 0.0)) throw ConfigError("robot.buffer must be >= 0");
}

ForbiddenSets forbidden_sets(const PredictionStack& stack) {
    ForbiddenSets out;
    out.reserve(stack.steps.size());
    for (const auto& s : stack.steps) {
        out.push_back(s.forbidden);
    }
    return out;
}

bool constraint_check(std::span<const AgentState> states, const ForbiddenSets& forbidden,
                      const Grid& grid, double buffer) {
    const double radius = buffer + 0.5 * grid.cell_size();
    for (std::size_t k = 0; k < forbidden.size(); ++k) {
        if (k + 1 >= states.size()) {
            if (!forbidden[k].empty()) return false;
            continue;
        }
        for (int cell : forbidden[k]) {
            if (!((states[k + 1].position - grid.center(cell)).norm() > radius)) {
                return false;
            }
        }
    }
    return true;
}

double robot_cost(std::span<const AgentAction> actions, const AgentState& x_r,
                  const RobotParams& params, const KinematicModel& model) {
    double total = 0.0;
    Vec2 pos = x_r.position;
    for (const auto& a : actions) {
        pos = step(AgentState(pos), a, model).position;
        total += weighted_sq(pos - params.goal, params.theta5) + weighted_sq(a.velocity, params.theta6);
    }
    return total;
}

ActionSequence shift_actions(const ActionSequence& actions, int horizon) {
    ActionSequence out;
    if (actions.empty()) {
        return ActionSequence(horizon, AgentAction(0.0, 0.0));
    }
    out.assign(actions.begin() + 1, actions.end());
    out.push_back(actions.back());
    out.resize(horizon, out.back());
    return out;
}

RobotPlan plan(const AgentState& x_r, const ForbiddenSets& forbidden, const Grid& grid,
               const RobotParams& params, const KinematicModel& model,
               const std::optional<RobotPlan>& warm_start) {
    params.validate();
    Planner planner(x_r, forbidden, grid, params, model);
    return planner.solve(warm_start);
}

RobotPlan plan(const AgentState& x_r, const PredictionStack& stack, const Grid& grid,
               const RobotParams& params, const KinematicModel& model,
               const std::optional<RobotPlan>& warm_start) {
    return plan(x_r, forbidden_sets(stack), grid, params, model, warm_start);
}

}  // namespace awareplan
