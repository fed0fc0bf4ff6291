#include "awareplan/cli_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace awareplan::io {

namespace {

ScenarioConfig paper_sec4() {
    ScenarioConfig c;
    c.name = "paper-sec4";
    c.human.action_set = make_lattice_action_set(0.5);
    return c;
}

// Desk-scale crossing. The human lattice is slowed so both agents reach the
// crossing point together; see README for the numbers behind it.
ScenarioConfig paper_sec5() {
    ScenarioConfig c;
    c.name = "paper-sec5";
    c.grid = Grid::centered(4.0, 0.0175);
    c.human.goal = Vec2(-2.0, 0.0);
    c.human.horizon = 2;
    c.human.theta4 = 1.0;
    c.human.action_set = make_lattice_action_set(0.035);
    c.human_start = AgentState(2.0, 0.0);
    c.robot.goal = Vec2(0.0, -3.0);
    c.robot.horizon = 2;
    c.robot.input_box = Box2{Vec2(-0.1, -0.1), Vec2(0.1, 0.1)};
    c.robot.state_bounds = Box2{Vec2(-4.0, -4.0), Vec2(4.0, 4.0)};
    c.robot_start = AgentState(0.0, 3.0);
    return c;
}

ScenarioConfig paper_sec5_noisy() {
    ScenarioConfig c = paper_sec5();
    c.name = "paper-sec5-noisy";
    c.human.dist_noise_std = 0.1;
    return c;
}

ScenarioConfig robot_only() {
    ScenarioConfig c = paper_sec4();
    c.name = "robot-only";
    c.human_present = false;
    return c;
}

const std::vector<std::pair<std::string, ScenarioConfig (*)()>>& registry() {
    static const std::vector<std::pair<std::string, ScenarioConfig (*)()>> r = {
        {"paper-sec4", &paper_sec4},
        {"paper-sec5", &paper_sec5},
        {"paper-sec5-noisy", &paper_sec5_noisy},
        {"robot-only", &robot_only},
    };
    return r;
}

// Reads one JSON object, remembers which keys were consumed and rejects the rest.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail(path_, "expected an object");
    }

    [[noreturn]] static void fail(const std::string& field, const std::string& what) {
        throw ConfigError((field.empty() ? std::string("config") : field) + ": " + what);
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const json* take(const std::string& key) {
        used_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    void number(const std::string& key, double& out) {
        if (const json* v = take(key)) {
            if (!v->is_number()) fail(field(key), "expected a number");
            out = v->get<double>();
        }
    }

    void integer(const std::string& key, int& out) {
        if (const json* v = take(key)) {
            if (!v->is_number_integer()) fail(field(key), "expected an integer");
            out = v->get<int>();
        }
    }

    void boolean(const std::string& key, bool& out) {
        if (const json* v = take(key)) {
            if (!v->is_boolean()) fail(field(key), "expected true or false");
            out = v->get<bool>();
        }
    }

    void string(const std::string& key, std::string& out) {
        if (const json* v = take(key)) {
            if (!v->is_string()) fail(field(key), "expected a string");
            out = v->get<std::string>();
        }
    }

    void vec(const std::string& key, Vec2& out) {
        if (const json* v = take(key)) out = parse_vec(*v, field(key));
    }

    void mat(const std::string& key, Mat2& out) {
        const json* v = take(key);
        if (!v) return;
        if (v->is_number()) {
            out = v->get<double>() * Mat2::Identity();
            return;
        }
        if (!v->is_array() || v->size() != 2) fail(field(key), "expected a number or a 2x2 array");
        const Vec2 r0 = parse_vec((*v)[0], field(key) + "[0]");
        const Vec2 r1 = parse_vec((*v)[1], field(key) + "[1]");
        out << r0.x(), r0.y(), r1.x(), r1.y();
    }

    void box(const std::string& key, Box2& out) {
        const json* v = take(key);
        if (!v) return;
        Reader r(*v, field(key));
        r.vec("lo", out.lo);
        r.vec("hi", out.hi);
        r.finish();
        if (!(out.lo.array() <= out.hi.array()).all()) fail(field(key), "lo must not exceed hi");
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!used_.count(it.key())) fail(field(it.key()), "unknown key");
        }
    }

    static Vec2 parse_vec(const json& v, const std::string& where) {
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
            fail(where, "expected [x, y]");
        }
        return Vec2(v[0].get<double>(), v[1].get<double>());
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

// Re-raises a validation error with the field it concerns, when known.
template <typename F>
void checked(const std::string& prefix, F&& f) {
    try {
        f();
    } catch (const ConfigError& e) {
        throw ConfigError(prefix + ": " + e.what());
    }
}

void read_grid(Reader& top, Grid& grid) {
    const json* v = top.take("grid");
    if (!v) return;
    Reader r(*v, "grid");
    double cell = grid.cell_size();
    r.number("cell_size", cell);
    if (!(cell > 0.0) || !std::isfinite(cell)) Reader::fail("grid.cell_size", "must be positive");
    if (r.has("half_extent")) {
        if (r.has("origin") || r.has("nx") || r.has("ny")) {
            Reader::fail("grid", "give either half_extent or origin/nx/ny, not both");
        }
        double half = 0.0;
        r.number("half_extent", half);
        if (!(half > 0.0)) Reader::fail("grid.half_extent", "must be positive");
        r.finish();
        grid = Grid::centered(half, cell);
        return;
    }
    Vec2 origin = grid.origin();
    int nx = grid.nx();
    int ny = grid.ny();
    r.vec("origin", origin);
    r.integer("nx", nx);
    r.integer("ny", ny);
    r.finish();
    grid = Grid(origin, cell, nx, ny);
}

void read_human(Reader& top, ScenarioConfig& c) {
    const json* v = top.take("human");
    if (!v) return;
    Reader r(*v, "human");
    HumanParams& h = c.human;
    r.boolean("present", c.human_present);
    Vec2 start = c.human_start.position;
    r.vec("start", start);
    c.human_start = AgentState(start);
    r.vec("goal", h.goal);
    r.mat("theta1", h.theta1);
    r.mat("theta2", h.theta2);
    r.number("theta3", h.theta3);
    r.number("theta4", h.theta4);
    r.integer("beta", h.beta);
    r.integer("horizon", h.horizon);
    r.number("dist_noise_std", h.dist_noise_std);
    if (const json* m = r.take("robot_model")) {
        if (!m->is_string()) Reader::fail("human.robot_model", "expected a string");
        checked("human.robot_model", [&] { h.robot_model = robot_model_from_string(m->get<std::string>()); });
    }
    if (const json* ctl = r.take("control")) {
        if (!ctl->is_string()) Reader::fail("human.control", "expected a string");
        checked("human.control", [&] { c.human_control = human_control_from_string(ctl->get<std::string>()); });
    }
    const json* set = r.take("action_set");
    const json* speed = r.take("nominal_speed");
    if (set && speed) Reader::fail("human", "give either action_set or nominal_speed, not both");
    if (speed) {
        if (!speed->is_number() || !(speed->get<double>() > 0.0)) {
            Reader::fail("human.nominal_speed", "expected a positive number");
        }
        h.action_set = make_lattice_action_set(speed->get<double>());
    }
    if (set) {
        if (!set->is_array() || set->empty()) Reader::fail("human.action_set", "expected a non-empty array");
        h.action_set.clear();
        for (std::size_t i = 0; i < set->size(); ++i) {
            h.action_set.emplace_back(Reader::parse_vec((*set)[i], "human.action_set[" + std::to_string(i) + "]"));
        }
    }
    r.finish();
}

void read_robot(Reader& top, ScenarioConfig& c) {
    const json* v = top.take("robot");
    if (!v) return;
    Reader r(*v, "robot");
    RobotParams& p = c.robot;
    Vec2 start = c.robot_start.position;
    r.vec("start", start);
    c.robot_start = AgentState(start);
    r.vec("goal", p.goal);
    r.mat("theta5", p.theta5);
    r.mat("theta6", p.theta6);
    r.integer("horizon", p.horizon);
    r.box("input_box", p.input_box);
    r.box("state_bounds", p.state_bounds);
    r.number("p_th", p.p_th);
    r.number("buffer", p.buffer);
    r.finish();
}

json mat_to_json(const Mat2& m) {
    return json::array({json::array({m(0, 0), m(0, 1)}), json::array({m(1, 0), m(1, 1)})});
}

json box_to_json(const Box2& b) { return {{"lo", vec_to_json(b.lo)}, {"hi", vec_to_json(b.hi)}}; }

json grid_to_json(const Grid& g) {
    return {{"origin", vec_to_json(g.origin())}, {"cell_size", g.cell_size()}, {"nx", g.nx()}, {"ny", g.ny()}};
}

json actions_to_json(std::span<const AgentAction> a) {
    json out = json::array();
    for (const auto& u : a) out.push_back(vec_to_json(u.velocity));
    return out;
}

json states_to_json(std::span<const AgentState> s) {
    json out = json::array();
    for (const auto& x : s) out.push_back(vec_to_json(x.position));
    return out;
}

std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ConfigError("cannot read '" + p.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

double max_collision_probability(const PredictionStack& s) {
    double m = 0.0;
    for (const auto& st : s.steps) m = std::max(m, st.collision_probability);
    return m;
}

json heatmap_frame(const Grid& g, const json& prediction) {
    json steps = json::array();
    for (std::size_t k = 0; k < prediction.size(); ++k) {
        const json& p = prediction[k];
        json cells = json::array();
        for (const auto& cm : p.at("cells")) {
            const CellIndex ci = g.unlinear(cm[0].get<int>());
            cells.push_back({ci.ix, ci.iy, cm[1]});
        }
        json forb = json::array();
        for (const auto& id : p.at("forbidden")) {
            const CellIndex ci = g.unlinear(id.get<int>());
            forb.push_back({ci.ix, ci.iy});
        }
        steps.push_back({{"step", k + 1},
                         {"p_coll", p.at("p_coll")},
                         {"cells", std::move(cells)},
                         {"forbidden", std::move(forb)}});
    }
    return steps;
}

}  // namespace

std::vector<std::string> builtin_scenarios() {
    std::vector<std::string> names;
    for (const auto& [n, f] : registry()) names.push_back(n);
    return names;
}

std::optional<ScenarioConfig> builtin_scenario(const std::string& name) {
    for (const auto& [n, f] : registry()) {
        if (n == name) return f();
    }
    return std::nullopt;
}

json vec_to_json(const Vec2& v) { return json::array({v.x(), v.y()}); }

ScenarioConfig scenario_from_json(const json& j) {
    Reader top(j, "");
    std::string base = "paper-sec4";
    top.string("base", base);
    auto found = builtin_scenario(base);
    if (!found) Reader::fail("base", "unknown builtin scenario '" + base + "'");
    ScenarioConfig c = *found;

    if (const json* v = top.take("version")) {
        if (!v->is_number_integer() || v->get<int>() != kConfigVersion) {
            Reader::fail("version", "unsupported (expected " + std::to_string(kConfigVersion) + ")");
        }
    }
    if (!top.has("name") && top.has("base")) c.name = base;
    top.string("name", c.name);
    top.number("dt", c.dt);
    read_grid(top, c.grid);
    top.number("omega_h", c.omega_h);
    top.number("prior", c.prior);
    top.integer("max_steps", c.max_steps);
    top.number("goal_tolerance", c.goal_tolerance);
    if (const json* s = top.take("seed")) {
        if (!s->is_number_unsigned()) Reader::fail("seed", "expected a non-negative integer");
        c.seed = s->get<std::uint64_t>();
    }
    top.boolean("prune_collisions", c.prune_collisions);
    read_human(top, c);
    read_robot(top, c);
    top.finish();
    c.validate();
    return c;
}

json scenario_to_json(const ScenarioConfig& c) {
    const HumanParams& h = c.human;
    const RobotParams& r = c.robot;
    json human = {
        {"present", c.human_present},
        {"start", vec_to_json(c.human_start.position)},
        {"goal", vec_to_json(h.goal)},
        {"theta1", mat_to_json(h.theta1)},
        {"theta2", mat_to_json(h.theta2)},
        {"theta3", h.theta3},
        {"theta4", h.theta4},
        {"beta", h.beta},
        {"horizon", h.horizon},
        {"dist_noise_std", h.dist_noise_std},
        {"robot_model", to_string(h.robot_model)},
        {"control", to_string(c.human_control)},
        {"action_set", actions_to_json(h.action_set)},
    };
    json robot = {
        {"start", vec_to_json(c.robot_start.position)},
        {"goal", vec_to_json(r.goal)},
        {"theta5", mat_to_json(r.theta5)},
        {"theta6", mat_to_json(r.theta6)},
        {"horizon", r.horizon},
        {"input_box", box_to_json(r.input_box)},
        {"state_bounds", box_to_json(r.state_bounds)},
        {"p_th", r.p_th},
        {"buffer", r.buffer},
    };
    return {
        {"version", kConfigVersion},
        {"name", c.name},
        {"dt", c.dt},
        {"grid", grid_to_json(c.grid)},
        {"omega_h", c.omega_h},
        {"prior", c.prior},
        {"max_steps", c.max_steps},
        {"goal_tolerance", c.goal_tolerance},
        {"seed", c.seed},
        {"prune_collisions", c.prune_collisions},
        {"human", std::move(human)},
        {"robot", std::move(robot)},
    };
}

ScenarioConfig load_scenario(const std::string& name_or_path) {
    if (auto b = builtin_scenario(name_or_path)) return *b;
    const std::filesystem::path p(name_or_path);
    if (!std::filesystem::exists(p)) {
        std::string names;
        for (const auto& n : builtin_scenarios()) names += (names.empty() ? "" : ", ") + n;
        throw ConfigError("'" + name_or_path + "' is neither a file nor a builtin scenario (" + names + ")");
    }
    json j;
    try {
        j = json::parse(read_text(p));
    } catch (const json::parse_error& e) {
        throw ConfigError(p.string() + ": invalid JSON: " + e.what());
    }
    return scenario_from_json(j);
}

json prediction_to_json(const PredictionStack& stack) {
    json out = json::array();
    for (const auto& s : stack.steps) {
        json cells = json::array();
        for (const auto& [id, m] : s.distribution.cells()) cells.push_back({id, m});
        out.push_back({{"p_coll", s.collision_probability}, {"forbidden", s.forbidden}, {"cells", std::move(cells)}});
    }
    return out;
}

json indices_to_json(const PerformanceIndices& pi) {
    return {{"robot", pi.robot}, {"human", pi.human}, {"total", pi.total}};
}

json trace_to_json(const SimTrace& trace, const TraceOptions& options) {
    json steps = json::array();
    for (const auto& r : trace.steps) {
        json s = {
            {"t", r.t},
            {"robot", vec_to_json(r.robot.position)},
            {"human", vec_to_json(r.human.position)},
            {"robot_action", vec_to_json(r.robot_action.velocity)},
            {"human_action", vec_to_json(r.human_action.velocity)},
            {"belief", r.belief},
            {"observed", r.observed ? vec_to_json(r.observed->velocity) : json(nullptr)},
            {"informative", r.informative},
            {"belief_degenerate", r.belief_degenerate},
            {"plan",
             {{"actions", actions_to_json(r.plan.actions)},
              {"states", states_to_json(r.plan.predicted_states)},
              {"cost", r.plan.cost},
              {"feasible", r.plan.feasible},
              {"max_violation", r.plan.max_violation},
              {"checked", r.plan_checked}}},
        };
        if (options.include_distributions) {
            s["prediction"] = prediction_to_json(r.prediction);
        } else {
            json pc = json::array();
            for (const auto& st : r.prediction.steps) pc.push_back(st.collision_probability);
            s["p_coll"] = std::move(pc);
        }
        if (options.include_wall_clock) s["wall_ms"] = r.wall_ms;
        steps.push_back(std::move(s));
    }
    const double sep = min_separation(trace);
    return {
        {"format", "awareplan-trace"},
        {"version", kTraceVersion},
        {"config", scenario_to_json(trace.config)},
        {"summary",
         {{"steps", trace.steps.size()},
          {"reached_goals", trace.reached_goals},
          {"indices", indices_to_json(trace.indices)},
          {"min_separation", std::isfinite(sep) ? json(sep) : json(nullptr)},
          {"shared_cells", shared_cell_count(trace)},
          {"final_belief", trace.steps.empty() ? trace.config.prior : trace.steps.back().belief}}},
        {"robot_states", states_to_json(trace.robot_states)},
        {"human_states", states_to_json(trace.human_states)},
        {"steps", std::move(steps)},
    };
}

std::string trace_to_csv(const SimTrace& trace) {
    std::ostringstream out;
    out << "t,robot_x,robot_y,human_x,human_y,robot_ux,robot_uy,human_ux,human_uy,belief,informative,"
           "plan_feasible,plan_checked,plan_cost,p_coll_max,forbidden_cells,support_cells\n";
    for (const auto& r : trace.steps) {
        std::size_t forb = 0, support = 0;
        for (const auto& s : r.prediction.steps) {
            forb += s.forbidden.size();
            support += s.distribution.support_size();
        }
        out << r.t << ',' << fmt(r.robot.position.x()) << ',' << fmt(r.robot.position.y()) << ','
            << fmt(r.human.position.x()) << ',' << fmt(r.human.position.y()) << ','
            << fmt(r.robot_action.velocity.x()) << ',' << fmt(r.robot_action.velocity.y()) << ','
            << fmt(r.human_action.velocity.x()) << ',' << fmt(r.human_action.velocity.y()) << ','
            << fmt(r.belief) << ',' << (r.informative ? 1 : 0) << ',' << (r.plan.feasible ? 1 : 0) << ','
            << (r.plan_checked ? 1 : 0) << ',' << fmt(r.plan.cost) << ','
            << fmt(max_collision_probability(r.prediction)) << ',' << forb << ',' << support << '\n';
    }
    return out.str();
}

json plot_data(const json& doc) {
    if (!doc.is_object() || doc.value("format", "") != "awareplan-trace") {
        throw ConfigError("plot: input is not an awareplan trace document");
    }
    const ScenarioConfig cfg = scenario_from_json(doc.at("config"));
    const Grid& g = cfg.grid;
    json frames = json::array();
    json belief = json::array();
    for (const auto& s : doc.at("steps")) {
        json f = {{"t", s.at("t")}, {"plan", s.at("plan").at("states")}, {"feasible", s.at("plan").at("feasible")}};
        if (s.contains("prediction")) f["heatmap"] = heatmap_frame(g, s.at("prediction"));
        frames.push_back(std::move(f));
        belief.push_back(s.at("belief"));
    }
    return {
        {"format", "awareplan-plot"},
        {"version", kTraceVersion},
        {"name", cfg.name},
        {"grid", grid_to_json(g)},
        {"goals", {{"robot", vec_to_json(cfg.robot.goal)}, {"human", vec_to_json(cfg.human.goal)}}},
        {"robot_path", doc.at("robot_states")},
        {"human_path", doc.at("human_states")},
        {"belief", std::move(belief)},
        {"frames", std::move(frames)},
    };
}

json plot_data(const SimTrace& trace) { return plot_data(trace_to_json(trace)); }

json sweep_to_json(const std::vector<SweepRow>& rows) {
    json out = json::array();
    for (const auto& r : rows) {
        out.push_back({{"horizon", r.horizon},
                       {"mode", r.predictive ? "predictive" : "non-predictive"},
                       {"steps", r.steps},
                       {"raw", indices_to_json(r.raw)},
                       {"normalized", indices_to_json(r.normalized)}});
    }
    return out;
}

std::string sweep_to_table(const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    char line[256];
    std::snprintf(line, sizeof line, "%-15s %4s %12s %12s %12s %8s %8s %8s %6s\n", "mode", "N_R", "PI_R", "PI_H",
                  "PI_T", "norm_R", "norm_H", "norm_T", "steps");
    out << line;
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%-15s %4d %12.3f %12.3f %12.3f %8.4f %8.4f %8.4f %6d\n",
                      r.predictive ? "predictive" : "non-predictive", r.horizon, r.raw.robot, r.raw.human,
                      r.raw.total, r.normalized.robot, r.normalized.human, r.normalized.total, r.steps);
        out << line;
    }
    return out.str();
}

json impact_to_json(const PredictionImpactReport& rep) {
    auto side = [](const SimTrace& t, const PerformanceIndices& pi, double width) {
        return json{{"indices", indices_to_json(pi)},
                    {"mean_support_width", width},
                    {"steps", t.steps.size()},
                    {"min_separation", min_separation(t)},
                    {"shared_cells", shared_cell_count(t)}};
    };
    return {{"non_predictive", side(rep.non_predictive, rep.non_predictive_indices, rep.non_predictive_width)},
            {"predictive", side(rep.predictive, rep.predictive_indices, rep.predictive_width)},
            {"collision_free", rep.collision_free}};
}

json awareness_to_json(const AwarenessReport& rep) {
    return {{"true_beta", rep.true_beta},
            {"indices", indices_to_json(rep.indices)},
            {"belief", rep.belief},
            {"final_belief", rep.belief.empty() ? rep.trace.config.prior : rep.belief.back()},
            {"min_distance", std::isfinite(rep.min_distance) ? json(rep.min_distance) : json(nullptr)},
            {"steps", rep.trace.steps.size()},
            {"reached_goals", rep.trace.reached_goals}};
}

std::filesystem::path default_output_dir() {
    if (const char* d = std::getenv("AWAREPLAN_OUT_DIR"); d && *d) return d;
    return std::filesystem::current_path();
}

std::filesystem::path resolve_output(const std::string& path) {
    std::filesystem::path p(path);
    if (p.is_relative()) p = default_output_dir() / p;
    return p;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw Error("write failed for '" + path.string() + "'");
}

}  // namespace awareplan::io
