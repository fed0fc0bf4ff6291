#pragma once

#include "awareplan/sim.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace awareplan::io {

using json = nlohmann::json;

inline constexpr int kConfigVersion = 1;
inline constexpr int kTraceVersion = 1;

std::vector<std::string> builtin_scenarios();
std::optional<ScenarioConfig> builtin_scenario(const std::string& name);

/// Builtin name or path to a JSON file. Keys absent from the file take the
/// values of `base` (a builtin name, default paper-sec4). Unknown keys and
/// invalid values raise ConfigError naming the offending field.
ScenarioConfig load_scenario(const std::string& name_or_path);
ScenarioConfig scenario_from_json(const json& j);
json scenario_to_json(const ScenarioConfig& c);

json vec_to_json(const Vec2& v);
json prediction_to_json(const PredictionStack& stack);

struct TraceOptions {
    bool include_distributions = true;
    bool include_wall_clock = false;  // breaks byte-for-byte reproducibility
};

json trace_to_json(const SimTrace& trace, const TraceOptions& options = {});
std::string trace_to_csv(const SimTrace& trace);

/// Polylines plus per-tick heatmaps in (ix, iy, mass) form for plotting.
json plot_data(const SimTrace& trace);
/// Same, rebuilt from an exported trace document.
json plot_data(const json& trace_document);

json indices_to_json(const PerformanceIndices& pi);
json sweep_to_json(const std::vector<SweepRow>& rows);
std::string sweep_to_table(const std::vector<SweepRow>& rows);
json impact_to_json(const PredictionImpactReport& report);
json awareness_to_json(const AwarenessReport& report);

/// $AWAREPLAN_OUT_DIR when set, else the working directory.
std::filesystem::path default_output_dir();
/// Relative paths resolve against default_output_dir(); parents are created.
std::filesystem::path resolve_output(const std::string& path);
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace awareplan::io
