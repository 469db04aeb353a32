#pragma once

#include "cave/types.hpp"

#include <map>
#include <span>
#include <utility>
#include <vector>

namespace cave
{

// Downlink transfer + compute + uplink transfer, in seconds.
// Throws std::domain_error for a nonpositive allocation or rate.
double round_trip_latency(const TaskSpec& task, const LinkRates& rates, double gflops);

// Probability that a replica with the given round-trip latency completes
// successfully: exp(-rate * latency). Always 1 for the local vehicle.
double reliability(const VehicleState& vehicle, double latency);

struct ReplicaLatency
{
    const VehicleState* vehicle = nullptr;
    double latency = 0.0;
};

// Probability that every replica fails; 1 for an empty row.
double task_unreliability(std::span<const ReplicaLatency> row);

// Same product, taking success probabilities directly.
double task_unreliability_from_success(std::span<const double> success_probabilities);

using PairLatencies = std::map<std::pair<TaskId, VehicleId>, double>;

// Aggregate latency of every assigned pair whose task is listed in `tasks`.
// Throws InconsistencyError if an assigned pair has no latency or refers to an
// unknown task.
double objective_p0(std::span<const TaskSpec> tasks, const Assignment& assignment,
                    const PairLatencies& latencies);

} // namespace cave
