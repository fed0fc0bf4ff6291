#include "awareplan/cli_io.hpp"
#include "awareplan/sim.hpp"
#ifdef AWAREPLAN_HAVE_BRIDGE
#include "awareplan/bridge.hpp"
#endif

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>

using namespace awareplan;
using io::json;

namespace {

constexpr int kUsageError = 2;

ScenarioConfig load(const std::string& scenario, const std::optional<std::uint64_t>& seed) {
    ScenarioConfig c = io::load_scenario(scenario);
    if (seed) c.seed = *seed;
    return c;
}

void emit(const std::string& out, const std::string& content, const char* what) {
    const auto path = io::resolve_output(out);
    io::write_file(path, content);
    std::cout << what << ": " << path.string() << '\n';
}

std::string summary_line(const SimTrace& t) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "steps=%zu reached=%s PI_R=%.3f PI_H=%.3f PI_T=%.3f min_sep=%.3f belief=%.4f",
                  t.steps.size(), t.reached_goals ? "yes" : "no", t.indices.robot, t.indices.human,
                  t.indices.total, min_separation(t), t.steps.empty() ? t.config.prior : t.steps.back().belief);
    return buf;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Awareness-aware robot motion planning: simulation and experiments"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    // Each subcommand owns its scenario selection and default.
    struct Source {
        std::string scenario;
        std::optional<std::uint64_t> seed;
        ScenarioConfig load() const { return ::load(scenario, seed); }
    };
    std::map<CLI::App*, Source> sources;
    auto add_source = [&](CLI::App* sub, const std::string& default_scenario, const char* help) {
        Source& src = sources[sub];
        src.scenario = default_scenario;
        sub->add_option("--scenario,-s", src.scenario, help)->capture_default_str();
        sub->add_option("--seed", src.seed, "override the scenario seed");
    };

    // run
    auto* run = app.add_subcommand("run", "simulate one scenario and write its trace");
    std::string run_out = "trace.json", run_csv;
    bool no_dist = false, wall = false;
    add_source(run, "paper-sec4", "builtin name or JSON file");
    run->add_option("--out,-o", run_out, "trace JSON (relative to $AWAREPLAN_OUT_DIR)")->capture_default_str();
    run->add_option("--csv", run_csv, "also write per-step scalars as CSV");
    run->add_flag("--no-distributions", no_dist, "omit the sparse predicted distributions");
    run->add_flag("--wall-clock", wall, "record per-tick planning time (not reproducible)");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "horizon sweep, predictive and non-predictive");
    std::vector<int> horizons{1, 3, 5, 7, 9};
    std::string sweep_out;
    add_source(sweep, "paper-sec4", "builtin name or JSON file");
    sweep->add_option("--horizons", horizons, "comma-separated N_R values")->delimiter(',')->capture_default_str();
    sweep->add_option("--out,-o", sweep_out, "also write the rows as JSON");

    // compare
    auto* compare = app.add_subcommand("compare", "non-predictive vs predictive human");
    int cmp_horizon = 5;
    std::string cmp_out;
    add_source(compare, "paper-sec4", "builtin name or JSON file");
    compare->add_option("--horizon", cmp_horizon, "N_H = N_R for the predictive run")->capture_default_str()
        ->check(CLI::PositiveNumber);
    compare->add_option("--out,-o", cmp_out, "also write the report as JSON");

    // aware
    auto* aware = app.add_subcommand("aware", "robot performance against a concerned or unconcerned human");
    std::vector<int> betas;
    std::string aware_out;
    add_source(aware, "paper-sec5", "builtin name or JSON file");
    aware->add_option("--beta", betas, "true awareness (0 or 1); repeatable, default both")
        ->check(CLI::IsMember({0, 1}));
    aware->add_option("--out,-o", aware_out, "write the report(s) as JSON");

    // plot
    auto* plot = app.add_subcommand("plot", "polylines and heatmaps for external plotting");
    std::string plot_trace, plot_out = "plot.json";
    add_source(plot, "paper-sec4", "simulate this scenario");
    plot->add_option("--trace", plot_trace, "use an exported trace instead of simulating");
    plot->add_option("--out,-o", plot_out, "plot data JSON")->capture_default_str();

    // config
    auto* config = app.add_subcommand("config", "print the fully resolved scenario");
    add_source(config, "paper-sec4", "builtin name or JSON file");
    bool list = false;
    config->add_flag("--list", list, "list builtin scenarios");

    // serve
    auto* serve = app.add_subcommand("serve", "interactive WebSocket bridge");
    std::string host = "127.0.0.1";
    unsigned short port = 8765;
    double tick_period = -1.0;
    bool start_paused = false;
    add_source(serve, "paper-sec5", "builtin name or JSON file");
    serve->add_option("--host", host)->capture_default_str();
    serve->add_option("--port", port)->capture_default_str();
    serve->add_option("--tick-period", tick_period, "seconds per tick (default: the scenario dt)");
    serve->add_flag("--paused", start_paused, "start paused; drive with control/step");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsageError;
    }

    try {
        CLI::App* chosen = app.get_subcommands().front();
        const Source& src = sources.at(chosen);
        if (run->parsed()) {
            const SimTrace tr = run_closed_loop(src.load());
            io::TraceOptions opt;
            opt.include_distributions = !no_dist;
            opt.include_wall_clock = wall;
            emit(run_out, io::trace_to_json(tr, opt).dump(1), "trace");
            if (!run_csv.empty()) emit(run_csv, io::trace_to_csv(tr), "csv");
            std::cout << summary_line(tr) << '\n';
        } else if (sweep->parsed()) {
            const auto rows = experiment_horizon_sweep(src.load(), horizons);
            std::cout << io::sweep_to_table(rows);
            if (!sweep_out.empty()) emit(sweep_out, io::sweep_to_json(rows).dump(1), "sweep");
        } else if (compare->parsed()) {
            const auto rep = experiment_prediction_impact(src.load(), cmp_horizon);
            std::printf("non-predictive: PI_R=%.3f PI_H=%.3f PI_T=%.3f width=%.2f steps=%zu\n",
                        rep.non_predictive_indices.robot, rep.non_predictive_indices.human,
                        rep.non_predictive_indices.total, rep.non_predictive_width, rep.non_predictive.steps.size());
            std::printf("predictive:     PI_R=%.3f PI_H=%.3f PI_T=%.3f width=%.2f steps=%zu\n",
                        rep.predictive_indices.robot, rep.predictive_indices.human, rep.predictive_indices.total,
                        rep.predictive_width, rep.predictive.steps.size());
            std::printf("collision free: %s\n", rep.collision_free ? "yes" : "no");
            if (!cmp_out.empty()) emit(cmp_out, io::impact_to_json(rep).dump(1), "report");
        } else if (aware->parsed()) {
            if (betas.empty()) betas = {0, 1};
            const ScenarioConfig base = src.load();
            json reports = json::array();
            for (int b : betas) {
                const AwarenessReport rep = experiment_awareness(base, b);
                std::printf("beta=%d: PI_R=%.4f final_belief=%.4f min_distance=%.3f steps=%zu\n", b,
                            rep.indices.robot, rep.belief.empty() ? base.prior : rep.belief.back(),
                            rep.min_distance, rep.trace.steps.size());
                reports.push_back(io::awareness_to_json(rep));
            }
            if (!aware_out.empty()) {
                emit(aware_out, (reports.size() == 1 ? reports[0] : reports).dump(1), "report");
            }
        } else if (plot->parsed()) {
            json data;
            if (!plot_trace.empty()) {
                std::ifstream in(plot_trace);
                if (!in) throw Error("cannot read '" + plot_trace + "'");
                data = io::plot_data(json::parse(in));
            } else {
                data = io::plot_data(run_closed_loop(src.load()));
            }
            emit(plot_out, data.dump(), "plot");
        } else if (config->parsed()) {
            if (list) {
                for (const auto& n : io::builtin_scenarios()) std::cout << n << '\n';
            } else {
                std::cout << io::scenario_to_json(src.load()).dump(2) << '\n';
            }
        } else if (serve->parsed()) {
#ifdef AWAREPLAN_HAVE_BRIDGE
            bridge::ServerOptions opt;
            opt.host = host;
            opt.port = port;
            opt.tick_period_s = tick_period;
            opt.handle_signals = true;
            opt.session.start_paused = start_paused;
            bridge::Server server(src.load(), opt);
            std::cout << "listening on ws://" << host << ':' << server.port() << std::endl;
            server.run();
#else
            std::cerr << "error: built without the bridge\n";
            return 1;
#endif
        }
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
