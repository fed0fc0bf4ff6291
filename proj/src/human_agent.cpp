#include "awareplan/human_agent.hpp"

#include "awareplan/log.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace awareplan {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double stage_cost(const Vec2& next, const Vec2& u, const Vec2& robot_next, double noise,
                  const HumanParams& p) {
    double c = weighted_sq(next - p.goal, p.theta1) + weighted_sq(u, p.theta2);
    if (p.beta == 1) {
        const double d = std::max(0.0, (next - robot_next).norm() + noise);
        c += p.theta3 * std::exp(-p.theta4 * d);
    }
    return c;
}

// Per-axis integer structure of the displacements dt*u. When every action is an
// integer multiple of a base step the reachable positions recombine and an
// exact cost-to-go can be tabulated.
struct Lattice {
    bool valid = false;
    Vec2 spacing = Vec2::Ones();
    std::vector<std::array<int, 2>> offsets;
    std::array<int, 2> reach{0, 0};
};

Lattice detect_lattice(std::span<const AgentAction> actions, double dt) {
    Lattice lat;
    lat.offsets.resize(actions.size());
    for (int axis = 0; axis < 2; ++axis) {
        double base = kInf;
        for (const auto& a : actions) {
            const double v = std::abs(dt * a.velocity[axis]);
            if (v > 1e-12) {
                base = std::min(base, v);
            }
        }
        if (!std::isfinite(base)) {
            base = 1.0;
        }
        lat.spacing[axis] = base;
        for (std::size_t i = 0; i < actions.size(); ++i) {
            const double m = dt * actions[i].velocity[axis] / base;
            const double r = std::round(m);
            if (std::abs(m - r) > 1e-9 || std::abs(r) > 64) {
                return Lattice{};
            }
            lat.offsets[i][axis] = static_cast<int>(r);
            lat.reach[axis] = std::max(lat.reach[axis], std::abs(static_cast<int>(r)));
        }
    }
    lat.valid = true;
    return lat;
}

// Cost-to-go V_i(x) on a rectangular patch of lattice points for each stage.
class CostToGo {
public:
    CostToGo(const Lattice& lat, const Vec2& anchor, std::span<const Vec2> starts, int horizon,
             std::span<const AgentState> robot_traj, std::span<const double> noise,
             const HumanParams& p, const KinematicModel& model)
        : lat_(lat), anchor_(anchor), horizon_(horizon) {
        int lo_x = std::numeric_limits<int>::max(), lo_y = lo_x;
        int hi_x = std::numeric_limits<int>::min(), hi_y = hi_x;
        for (const auto& s : starts) {
            const auto idx = index_of(s);
            lo_x = std::min(lo_x, idx[0]);
            hi_x = std::max(hi_x, idx[0]);
            lo_y = std::min(lo_y, idx[1]);
            hi_y = std::max(hi_y, idx[1]);
        }
        boxes_.resize(horizon + 1);
        values_.resize(horizon + 1);
        for (int i = 0; i <= horizon; ++i) {
            Box& b = boxes_[i];
            b.x0 = lo_x - i * lat.reach[0];
            b.y0 = lo_y - i * lat.reach[1];
            b.nx = hi_x - lo_x + 1 + 2 * i * lat.reach[0];
            b.ny = hi_y - lo_y + 1 + 2 * i * lat.reach[1];
        }
        values_[horizon].assign(static_cast<std::size_t>(boxes_[horizon].nx) * boxes_[horizon].ny,
                                0.0);
        const auto& set = p.action_set;
        for (int i = horizon - 1; i >= 0; --i) {
            const Box& b = boxes_[i];
            const Box& nb = boxes_[i + 1];
            const auto& next_vals = values_[i + 1];
            auto& vals = values_[i];
            vals.assign(static_cast<std::size_t>(b.nx) * b.ny, kInf);
            const Vec2 robot_next = robot_traj[i + 1].position;
            const double nz = noise.empty() ? 0.0 : noise[i];
            for (int iy = 0; iy < b.ny; ++iy) {
                for (int ix = 0; ix < b.nx; ++ix) {
                    const int gx = b.x0 + ix;
                    const int gy = b.y0 + iy;
                    const Vec2 pos = position_of(gx, gy);
                    double best = kInf;
                    for (std::size_t a = 0; a < set.size(); ++a) {
                        const Vec2& u = set[a].velocity;
                        const Vec2 next = pos + model.dt() * u;
                        const int nx = gx + lat.offsets[a][0] - nb.x0;
                        const int ny = gy + lat.offsets[a][1] - nb.y0;
                        const double v = stage_cost(next, u, robot_next, nz, p) +
                                         next_vals[static_cast<std::size_t>(ny) * nb.nx + nx];
                        best = std::min(best, v);
                    }
                    vals[static_cast<std::size_t>(iy) * b.nx + ix] = best;
                }
            }
        }
    }

    std::array<int, 2> index_of(const Vec2& pos) const {
        return {static_cast<int>(std::lround((pos.x() - anchor_.x()) / lat_.spacing.x())),
                static_cast<int>(std::lround((pos.y() - anchor_.y()) / lat_.spacing.y()))};
    }

    bool on_lattice(const Vec2& pos) const {
        for (int axis = 0; axis < 2; ++axis) {
            const double m = (pos[axis] - anchor_[axis]) / lat_.spacing[axis];
            if (std::abs(m - std::round(m)) > 1e-9) {
                return false;
            }
        }
        return true;
    }

    // Cost-to-go from `pos` with stages i..horizon-1 remaining.
    double value(int i, const Vec2& pos) const {
        const auto idx = index_of(pos);
        const Box& b = boxes_[i];
        const int ix = idx[0] - b.x0;
        const int iy = idx[1] - b.y0;
        if (ix < 0 || iy < 0 || ix >= b.nx || iy >= b.ny) {
            return 0.0;
        }
        return values_[i][static_cast<std::size_t>(iy) * b.nx + ix];
    }

private:
    struct Box {
        int x0 = 0, y0 = 0, nx = 0, ny = 0;
    };

    Vec2 position_of(int gx, int gy) const {
        return anchor_ + Vec2(gx * lat_.spacing.x(), gy * lat_.spacing.y());
    }

    const Lattice& lat_;
    Vec2 anchor_;
    int horizon_;
    std::vector<Box> boxes_;
    std::vector<std::vector<double>> values_;
};

// Depth-first branch and bound in lexicographic order. With an exact
// cost-to-go bound only near-optimal branches are expanded.
class SequenceSearch {
public:
    SequenceSearch(const HumanParams& p, const KinematicModel& model,
                   std::span<const AgentState> robot_traj, std::span<const double> noise, int horizon,
                   const CostToGo* ctg)
        : p_(p), model_(model), robot_(robot_traj), noise_(noise), horizon_(horizon), ctg_(ctg) {
        min_effort_ = kInf;
        for (const auto& a : p.action_set) {
            min_effort_ = std::min(min_effort_, weighted_sq(a.velocity, p.theta2));
        }
        min_effort_ = std::max(0.0, min_effort_);
    }

    std::pair<std::vector<int>, double> run(const Vec2& start) {
        best_cost_ = kInf;
        best_.clear();
        seed_incumbent(start);
        current_.assign(horizon_, 0);
        dfs(0, start, 0.0);
        return {best_, best_cost_};
    }

private:
    double lower_bound(int i, const Vec2& pos) const {
        if (ctg_ != nullptr) {
            const double v = ctg_->value(i, pos);
            return v * (1.0 - 1e-9) - 1e-12;
        }
        return (horizon_ - i) * min_effort_;
    }

    double stage(int i, const Vec2& next, const Vec2& u) const {
        return stage_cost(next, u, robot_[i + 1].position, noise_.empty() ? 0.0 : noise_[i], p_);
    }

    void consider(const std::vector<int>& seq, double cost) {
        if (cost < best_cost_ ||
            (cost == best_cost_ && std::lexicographical_compare(seq.begin(), seq.end(),
                                                                best_.begin(), best_.end()))) {
            best_cost_ = cost;
            best_ = seq;
        }
    }

    // Greedy descent on stage cost plus bound gives a near-optimal incumbent.
    void seed_incumbent(const Vec2& start) {
        std::vector<int> seq;
        Vec2 pos = start;
        double acc = 0.0;
        for (int i = 0; i < horizon_; ++i) {
            int arg = 0;
            double best = kInf;
            double best_stage = 0.0;
            Vec2 best_next = pos;
            for (std::size_t a = 0; a < p_.action_set.size(); ++a) {
                const Vec2& u = p_.action_set[a].velocity;
                const Vec2 next = step(AgentState(pos), p_.action_set[a], model_).position;
                const double s = stage(i, next, u);
                const double v = s + lower_bound(i + 1, next);
                if (v < best) {
                    best = v;
                    arg = static_cast<int>(a);
                    best_stage = s;
                    best_next = next;
                }
            }
            seq.push_back(arg);
            acc += best_stage;
            pos = best_next;
        }
        consider(seq, acc);
    }

    void dfs(int i, const Vec2& pos, double acc) {
        if (i == horizon_) {
            consider(current_, acc);
            return;
        }
        for (std::size_t a = 0; a < p_.action_set.size(); ++a) {
            const Vec2& u = p_.action_set[a].velocity;
            const Vec2 next = step(AgentState(pos), p_.action_set[a], model_).position;
            const double c = acc + stage(i, next, u);
            if (c + lower_bound(i + 1, next) > best_cost_) {
                continue;
            }
            current_[i] = static_cast<int>(a);
            dfs(i + 1, next, c);
        }
    }

    const HumanParams& p_;
    const KinematicModel& model_;
    std::span<const AgentState> robot_;
    std::span<const double> noise_;
    int horizon_;
    const CostToGo* ctg_;
    double min_effort_ = 0.0;
    double best_cost_ = kInf;
    std::vector<int> best_;
    std::vector<int> current_;
};

void check_solve_inputs(std::span<const AgentState> robot_traj, const HumanParams& params,
                        std::span<const double> noise) {
    if (params.action_set.empty()) {
        throw ConfigError("human action set is empty");
    }
    const int h = params.effective_horizon();
    if (static_cast<int>(robot_traj.size()) < h + 1) {
        throw DimensionError("robot trajectory shorter than human horizon + 1");
    }
    if (!noise.empty() && static_cast<int>(noise.size()) != h) {
        throw DimensionError("noise sample count must equal the human horizon");
    }
}

HumanPlan make_plan(const Vec2& start, const std::vector<int>& seq, double cost,
                    const HumanParams& params, const KinematicModel& model) {
    HumanPlan plan;
    plan.action_indices = seq;
    for (int idx : seq) {
        plan.actions.push_back(params.action_set[idx]);
    }
    plan.predicted_states = rollout(AgentState(start), plan.actions, model);
    plan.cost = cost;
    return plan;
}

}  // namespace

std::string to_string(RobotModel m) {
    switch (m) {
        case RobotModel::ConstantVelocity:
            return "constant_velocity";
        case RobotModel::OraclePlan:
            return "oracle_plan";
        case RobotModel::Frozen:
            return "frozen";
    }
    return "constant_velocity";
}

RobotModel robot_model_from_string(const std::string& s) {
    if (s == "constant_velocity") return RobotModel::ConstantVelocity;
    if (s == "oracle_plan") return RobotModel::OraclePlan;
    if (s == "frozen") return RobotModel::Frozen;
    throw ConfigError("unknown robot model '" + s + "'");
}

void HumanParams::validate() const {
    if (!is_finite(goal)) throw ConfigError("human.goal must be finite");
    if (!is_symmetric_psd(theta1)) throw ConfigError("human.theta1 must be symmetric PSD");
    if (!is_symmetric_psd(theta2)) throw ConfigError("human.theta2 must be symmetric PSD");
    if (!(theta3 > 0.0) || !std::isfinite(theta3)) throw ConfigError("human.theta3 must be > 0");
    if (!(theta4 >= 0.0) || !std::isfinite(theta4)) throw ConfigError("human.theta4 must be >= 0");
    if (beta != 0 && beta != 1) throw ConfigError("human.beta must be 0 or 1");
    if (horizon < 0) throw ConfigError("human.horizon must be >= 0");
    if (!(dist_noise_std >= 0.0)) throw ConfigError("human.dist_noise_std must be >= 0");
    if (action_set.empty()) throw ConfigError("human.action_set is empty");
    for (std::size_t i = 0; i < action_set.size(); ++i) {
        if (!is_finite(action_set[i].velocity)) {
            throw ConfigError("human.action_set contains a non-finite action");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (action_set[i] == action_set[j]) {
                throw ConfigError("human.action_set contains duplicates");
            }
        }
    }
}

ActionSequence make_lattice_action_set(double v) {
    ActionSequence set;
    const double levels[] = {-2.0 * v, -v, 0.0, v, 2.0 * v};
    for (double x : levels) {
        for (double y : levels) {
            set.emplace_back(x, y);
        }
    }
    return set;
}

int index_of(std::span<const AgentAction> set, const AgentAction& a) {
    for (std::size_t i = 0; i < set.size(); ++i) {
        if (set[i] == a) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

Trajectory predict_robot_trajectory(const AgentState& x_r, const AgentAction& u_r_last, int horizon,
                                    RobotModel mode, const KinematicModel& model,
                                    std::span<const AgentState> oracle_plan) {
    if (horizon < 1) {
        throw PreconditionError("predict_robot_trajectory: horizon must be >= 1");
    }
    Trajectory out;
    out.reserve(horizon + 1);
    if (mode == RobotModel::OraclePlan) {
        if (!oracle_plan.empty()) {
            for (int k = 0; k <= horizon; ++k) {
                out.push_back(oracle_plan[std::min<std::size_t>(k, oracle_plan.size() - 1)]);
            }
            return out;
        }
        log::warn("oracle robot plan unavailable; using constant-velocity extrapolation");
        mode = RobotModel::ConstantVelocity;
    }
    out.push_back(x_r);
    for (int k = 0; k < horizon; ++k) {
        out.push_back(mode == RobotModel::Frozen ? x_r : step(out.back(), u_r_last, model));
    }
    return out;
}

double human_cost(std::span<const AgentAction> actions, const AgentState& x_h0,
                  std::span<const AgentState> robot_traj, const HumanParams& params,
                  const KinematicModel& model, std::span<const double> noise) {
    const int h = params.effective_horizon();
    if (static_cast<int>(actions.size()) != h) {
        throw DimensionError("human_cost: action count must equal the human horizon");
    }
    if (static_cast<int>(robot_traj.size()) < h + 1) {
        throw DimensionError("human_cost: robot trajectory shorter than horizon + 1");
    }
    if (!noise.empty() && static_cast<int>(noise.size()) != h) {
        throw DimensionError("human_cost: noise sample count must equal the human horizon");
    }
    Vec2 pos = x_h0.position;
    double total = 0.0;
    for (int k = 0; k < h; ++k) {
        const Vec2 next = step(AgentState(pos), actions[k], model).position;
        total += stage_cost(next, actions[k].velocity, robot_traj[k + 1].position,
                            noise.empty() ? 0.0 : noise[k], params);
        pos = next;
    }
    return total;
}

std::vector<HumanPlan> solve_human_plans(std::span<const Vec2> starts,
                                         std::span<const AgentState> robot_traj,
                                         const HumanParams& params, const KinematicModel& model,
                                         std::span<const double> noise) {
    check_solve_inputs(robot_traj, params, noise);
    const int h = params.effective_horizon();
    std::vector<HumanPlan> plans(starts.size());
    if (starts.empty()) {
        return plans;
    }

    const Lattice lat = detect_lattice(params.action_set, model.dt());
    if (!lat.valid) {
        SequenceSearch search(params, model, robot_traj, noise, h, nullptr);
        for (std::size_t i = 0; i < starts.size(); ++i) {
            auto [seq, cost] = search.run(starts[i]);
            plans[i] = make_plan(starts[i], seq, cost, params, model);
        }
        return plans;
    }

    // Group starts by lattice coset; each group shares one table.
    std::vector<bool> done(starts.size(), false);
    for (std::size_t first = 0; first < starts.size(); ++first) {
        if (done[first]) {
            continue;
        }
        const Vec2 anchor = starts[first];
        std::vector<std::size_t> members;
        std::vector<Vec2> member_pos;
        for (std::size_t j = first; j < starts.size(); ++j) {
            if (done[j]) {
                continue;
            }
            bool same = true;
            for (int axis = 0; axis < 2; ++axis) {
                const double m = (starts[j][axis] - anchor[axis]) / lat.spacing[axis];
                same = same && std::abs(m - std::round(m)) <= 1e-9;
            }
            if (same) {
                members.push_back(j);
                member_pos.push_back(starts[j]);
                done[j] = true;
            }
        }
        const CostToGo ctg(lat, anchor, member_pos, h, robot_traj, noise, params, model);
        SequenceSearch search(params, model, robot_traj, noise, h, &ctg);
        for (std::size_t j : members) {
            auto [seq, cost] = search.run(starts[j]);
            plans[j] = make_plan(starts[j], seq, cost, params, model);
        }
    }
    return plans;
}

HumanPlan solve_human_plan(const AgentState& x_h, std::span<const AgentState> robot_traj,
                           const HumanParams& params, const KinematicModel& model,
                           std::span<const double> noise) {
    const Vec2 start = x_h.position;
    return std::move(solve_human_plans(std::span<const Vec2>(&start, 1), robot_traj, params, model,
                                       noise)
                         .front());
}

AgentAction act(const AgentState& x_h, const AgentState& x_r, const AgentAction& u_r_last,
                const HumanParams& params, const KinematicModel& model, std::uint64_t seed,
                std::span<const AgentState> oracle_plan) {
    params.validate();
    const int h = params.effective_horizon();
    const Trajectory robot =
        predict_robot_trajectory(x_r, u_r_last, h, params.effective_robot_model(), model, oracle_plan);
    std::vector<double> noise(h, 0.0);
    if (params.dist_noise_std > 0.0) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> dist(0.0, params.dist_noise_std);
        for (auto& n : noise) {
            n = dist(rng);
        }
    }
    return solve_human_plan(x_h, robot, params, model, noise).actions.front();
}

}  // namespace awareplan
