#pragma once

#include "cave/simulator.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace cave::sweep
{

enum class SweepParameter : std::uint8_t
{
    ArrivalIntensity,
    FailThreshold,
};

std::string_view to_string(SweepParameter p) noexcept;

struct SweepSpec
{
    SweepParameter parameter = SweepParameter::ArrivalIntensity;
    std::vector<double> values;
    std::size_t repetitions = 1;
    sim::ScenarioConfig base;
    // Schedulers compared at every point; defaults to base.scheduler alone.
    std::vector<sim::SchedulerKind> schedulers;

    void validate() const;
};

// {"parameter", "values", "repetitions", "base": {scenario}, "schedulers"?: [...]}
SweepSpec sweep_from_json(const nlohmann::json& j);

struct SweepRow
{
    sim::SchedulerKind scheduler = sim::SchedulerKind::Cave;
    SweepParameter parameter = SweepParameter::ArrivalIntensity;
    double value = 0.0;
    std::size_t rep = 0;
    sim::MetricsReport report;
};

// Config of one work item; repetition r runs with seed base.seed + r.
sim::ScenarioConfig point_config(const SweepSpec& spec, sim::SchedulerKind scheduler, double value, std::size_t rep);

// Rows ordered by (scheduler, value, rep) as listed in the spec, independent of
// `workers`. workers == 0 picks the hardware concurrency.
std::vector<SweepRow> run_sweep(const SweepSpec& spec, unsigned workers = 0);

inline constexpr std::string_view kSweepCsvHeader =
    "scheduler,param,value,rep,mean_latency_s,p80_latency_s,frac_under_threshold,mean_redundancy";

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

} // namespace cave::sweep
