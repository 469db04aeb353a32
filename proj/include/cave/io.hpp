#pragma once

#include "cave/simulator.hpp"

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

namespace cave::io
{

/// Malformed or out-of-range scenario / sweep input.
class ConfigError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// File could not be read or written.
class IoError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// Scenario keys mirror ScenarioConfig field names; absent keys keep their
// defaults, unknown keys are rejected. Optional "swarm" and "predictor" objects
// override the solver settings.
sim::ScenarioConfig scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const sim::ScenarioConfig& config);
sim::ScenarioConfig load_scenario(const std::filesystem::path& path);

nlohmann::json read_json_file(const std::filesystem::path& path);

// Shortest round-trip decimal form, independent of the global locale.
std::string format_double(double value);

inline constexpr std::string_view kTaskCsvHeader = "task_id,arrival_s,latency_s,unreliability,redundancy,outcome";

void write_tasks_csv(std::ostream& out, const sim::MetricsReport& report);
nlohmann::json summary_json(const sim::MetricsReport& report, const sim::ScenarioConfig& config);

// Writes tasks.csv and summary.json into `out_dir`, creating it if needed.
void write_run_outputs(const std::filesystem::path& out_dir, const sim::MetricsReport& report,
                       const sim::ScenarioConfig& config);

} // namespace cave::io
