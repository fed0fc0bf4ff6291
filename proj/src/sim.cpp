#include "awareplan/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace awareplan {

std::string to_string(HumanControl c) { return c == HumanControl::Scripted ? "scripted" : "external"; }

HumanControl human_control_from_string(const std::string& s) {
    if (s == "scripted") return HumanControl::Scripted;
    if (s == "external") return HumanControl::External;
    throw ConfigError("unknown human_control '" + s + "' (expected scripted or external)");
}

void ScenarioConfig::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
    robot.validate();
    if (!(omega_h >= 0.0 && omega_h <= 1.0)) throw ConfigError("omega_h must lie in [0, 1]");
    if (!(prior >= 0.0 && prior <= 1.0)) throw ConfigError("prior must lie in [0, 1]");
    if (max_steps < 1) throw ConfigError("max_steps must be >= 1");
    if (!(goal_tolerance >= 0.0)) throw ConfigError("goal_tolerance must be >= 0");
    if (!is_finite(robot_start.position) || !grid.contains(robot_start.position)) {
        throw ConfigError("robot.start lies outside the grid");
    }
    if (!robot.state_bounds.contains(robot_start.position)) {
        throw ConfigError("robot.start lies outside robot.state_bounds");
    }
    if (human_present) {
        human.validate();
        if (!is_finite(human_start.position) || !grid.contains(human_start.position)) {
            throw ConfigError("human.start lies outside the grid");
        }
        if (!grid.contains(human.goal)) throw ConfigError("human.goal lies outside the grid");
    }
}

double performance_index(std::span<const AgentState> states, const Vec2& goal) {
    double s = 0.0;
    for (const auto& x : states) {
        s += (x.position - goal).squaredNorm();
    }
    return s;
}

PerformanceIndices performance_indices(const SimTrace& trace) {
    PerformanceIndices pi;
    pi.robot = performance_index(trace.robot_states, trace.config.robot.goal);
    if (trace.config.human_present) {
        pi.human = performance_index(trace.human_states, trace.config.human.goal);
    }
    pi.total = pi.robot + pi.human;
    return pi;
}

double min_separation(const SimTrace& trace) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < trace.human_states.size() && t < trace.robot_states.size(); ++t) {
        best = std::min(best, (trace.robot_states[t].position - trace.human_states[t].position).norm());
    }
    return best;
}

int shared_cell_count(const SimTrace& trace) {
    const Grid& g = trace.config.grid;
    int n = 0;
    for (std::size_t t = 0; t < trace.human_states.size() && t < trace.robot_states.size(); ++t) {
        if (g.clamped_cell_of(trace.robot_states[t].position) ==
            g.clamped_cell_of(trace.human_states[t].position)) {
            ++n;
        }
    }
    return n;
}

double mean_support_width(const SimTrace& trace) {
    double sum = 0.0;
    int n = 0;
    for (const auto& r : trace.steps) {
        for (const auto& s : r.prediction.steps) {
            sum += static_cast<double>(s.distribution.support_size());
            ++n;
        }
    }
    return n == 0 ? 0.0 : sum / n;
}

Simulation::Simulation(ScenarioConfig config) : config_(std::move(config)), model_(config_.dt) {
    config_.validate();
    reset();
}

void Simulation::reset(std::optional<std::uint64_t> seed) {
    if (seed) {
        config_.seed = *seed;
    }
    rng_.seed(config_.seed);
    t_ = 0;
    done_ = false;
    reached_ = false;
    x_r_ = config_.robot_start;
    x_h_ = config_.human_start;
    u_r_last_ = AgentAction(0.0, 0.0);
    belief_ = Belief{config_.prior};
    prev_plan_.reset();
    prev_human_view_.clear();
    prev_u_h_.reset();
    records_.clear();
    robot_states_ = {x_r_};
    human_states_.clear();
    if (config_.human_present) {
        human_states_.push_back(x_h_);
    }
}

Trajectory Simulation::lagged_robot_plan() const {
    const int n = config_.robot.horizon;
    if (prev_plan_) {
        return rollout(x_r_, shift_actions(prev_plan_->actions, n), model_);
    }
    return rollout(x_r_, ActionSequence(n, u_r_last_), model_);
}

bool Simulation::at_goals() const {
    const double tol = config_.goal_tolerance;
    if ((x_r_.position - config_.robot.goal).norm() > tol) return false;
    return !config_.human_present || (x_h_.position - config_.human.goal).norm() <= tol;
}

const StepRecord& Simulation::tick(const std::optional<Vec2>& command) {
    if (done_) {
        throw PreconditionError("simulation: episode already finished");
    }
    const auto start = std::chrono::steady_clock::now();
    const ScenarioConfig& c = config_;
    StepRecord rec;
    rec.t = t_;
    rec.robot = x_r_;
    rec.human = x_h_;

    const Trajectory lagged = lagged_robot_plan();
    // The robot's replica of the human: same model, no perception noise.
    HumanParams replica = c.human;
    replica.dist_noise_std = 0.0;

    if (c.human_present) {
        if (prev_u_h_) {
            const double l1 =
                likelihood(*prev_u_h_, prev_x_h_, prev_human_view_, 1, replica, model_, c.omega_h);
            const double l0 =
                likelihood(*prev_u_h_, prev_x_h_, prev_human_view_, 0, replica, model_, c.omega_h);
            const BeliefUpdate upd = update_with_likelihoods(belief_, l1, l0);
            belief_ = upd.posterior;
            rec.observed = prev_u_h_;
            rec.informative = l1 != l0;
            rec.belief_degenerate = upd.degenerate;
        }
        PredictionSettings settings;
        settings.omega_h = c.omega_h;
        settings.p_th = c.robot.p_th;
        settings.prune_collisions = c.prune_collisions;
        const auto dist0 = StateDistribution::delta(c.grid.linear(c.grid.clamped_cell_of(x_h_.position)));
        rec.prediction = propagate(dist0, lagged, u_r_last_, belief_, replica, c.grid, model_,
                                   c.robot.horizon, settings);
    }
    rec.belief = belief_.p_concerned;

    const ForbiddenSets forbidden =
        c.human_present ? forbidden_sets(rec.prediction) : ForbiddenSets(c.robot.horizon);
    rec.plan = plan(x_r_, forbidden, c.grid, c.robot, model_, prev_plan_);
    rec.plan_checked = constraint_check(rec.plan.predicted_states, forbidden, c.grid, c.robot.buffer);
    rec.robot_action = rec.plan.actions.front();

    if (c.human_present) {
        AgentAction u_h(0.0, 0.0);
        if (c.human_control == HumanControl::Scripted) {
            u_h = act(x_h_, x_r_, u_r_last_, c.human, model_, rng_(), lagged);
        } else {
            u_h = project_action(command.value_or(Vec2::Zero()), c.human.action_set);
        }
        prev_x_h_ = x_h_;
        prev_human_view_ = predict_robot_trajectory(x_r_, u_r_last_, c.human.effective_horizon(),
                                                    c.human.effective_robot_model(), model_, lagged);
        prev_u_h_ = u_h;
        rec.human_action = u_h;
        x_h_ = step(x_h_, u_h, model_);
        human_states_.push_back(x_h_);
    }

    x_r_ = step(x_r_, rec.robot_action, model_);
    robot_states_.push_back(x_r_);
    u_r_last_ = rec.robot_action;
    prev_plan_ = rec.plan;
    ++t_;
    reached_ = at_goals();
    done_ = reached_ || t_ >= c.max_steps;

    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    records_.push_back(std::move(rec));
    return records_.back();
}

SimTrace Simulation::trace() const {
    SimTrace tr;
    tr.config = config_;
    tr.steps = records_;
    tr.robot_states = robot_states_;
    tr.human_states = human_states_;
    tr.reached_goals = reached_;
    tr.indices = performance_indices(tr);
    return tr;
}

SimTrace run_closed_loop(const ScenarioConfig& config) {
    Simulation sim(config);
    while (!sim.done()) {
        sim.tick();
    }
    return sim.trace();
}

PredictionImpactReport experiment_prediction_impact(const ScenarioConfig& base, int horizon) {
    if (horizon < 1) throw PreconditionError("prediction impact: horizon must be >= 1");
    ScenarioConfig np = base;
    np.human.horizon = 0;
    np.robot.horizon = horizon;
    ScenarioConfig pr = base;
    pr.human.horizon = horizon;
    pr.robot.horizon = horizon;

    PredictionImpactReport rep;
    rep.non_predictive = run_closed_loop(np);
    rep.predictive = run_closed_loop(pr);
    rep.non_predictive_indices = rep.non_predictive.indices;
    rep.predictive_indices = rep.predictive.indices;
    rep.non_predictive_width = mean_support_width(rep.non_predictive);
    rep.predictive_width = mean_support_width(rep.predictive);
    rep.collision_free = shared_cell_count(rep.non_predictive) == 0 && shared_cell_count(rep.predictive) == 0;
    return rep;
}

std::vector<SweepRow> experiment_horizon_sweep(const ScenarioConfig& base, const std::vector<int>& horizons) {
    if (horizons.empty()) throw PreconditionError("horizon sweep: no horizons given");
    for (int n : horizons) {
        if (n < 1) throw PreconditionError("horizon sweep: horizons must be >= 1");
    }
    auto run = [&](int n, bool predictive) {
        ScenarioConfig cfg = base;
        cfg.robot.horizon = n;
        cfg.human.horizon = predictive ? n : 0;
        const SimTrace tr = run_closed_loop(cfg);
        SweepRow row;
        row.horizon = n;
        row.predictive = predictive;
        row.raw = tr.indices;
        row.steps = static_cast<int>(tr.steps.size());
        return row;
    };

    std::vector<SweepRow> rows;
    for (bool predictive : {false, true}) {
        for (int n : horizons) {
            rows.push_back(run(n, predictive));
        }
    }
    PerformanceIndices norm;
    const auto it = std::find_if(rows.begin(), rows.end(),
                                 [](const SweepRow& r) { return !r.predictive && r.horizon == 1; });
    norm = it != rows.end() ? it->raw : run(1, false).raw;
    auto ratio = [](double a, double b) { return b != 0.0 ? a / b : 0.0; };
    for (auto& r : rows) {
        r.normalized.robot = ratio(r.raw.robot, norm.robot);
        r.normalized.human = ratio(r.raw.human, norm.human);
        r.normalized.total = ratio(r.raw.total, norm.total);
    }
    return rows;
}

AwarenessReport experiment_awareness(const ScenarioConfig& base, int true_beta) {
    if (true_beta != 0 && true_beta != 1) throw PreconditionError("awareness: beta must be 0 or 1");
    ScenarioConfig cfg = base;
    cfg.human.beta = true_beta;
    AwarenessReport rep;
    rep.true_beta = true_beta;
    rep.trace = run_closed_loop(cfg);
    rep.indices = rep.trace.indices;
    for (const auto& r : rep.trace.steps) {
        rep.belief.push_back(r.belief);
    }
    rep.min_distance = min_separation(rep.trace);
    return rep;
}

}  // namespace awareplan
