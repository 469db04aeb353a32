#include "cave/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace cave
{

double norm(Vec2 v) noexcept { return std::hypot(v.x, v.y); }

void TaskSpec::validate() const
{
    if (!(compute > 0.0))
        throw std::invalid_argument("task " + std::to_string(raw(id)) + ": compute must be > 0");
    if (!(down_bits >= 0.0) || !(up_bits >= 0.0))
        throw std::invalid_argument("task " + std::to_string(raw(id)) + ": payload sizes must be >= 0");
    if (!(fail_threshold > 0.0 && fail_threshold <= 1.0))
        throw std::invalid_argument("task " + std::to_string(raw(id)) + ": fail_threshold must lie in (0, 1]");
}

void VehicleState::validate() const
{
    if (!(capacity > 0.0))
        throw std::invalid_argument("vehicle " + std::to_string(raw(id)) + ": capacity must be > 0");
    if (!(reliability_rate > 0.0))
        throw std::invalid_argument("vehicle " + std::to_string(raw(id)) + ": reliability_rate must be > 0");
    std::unordered_set<TaskId> seen;
    for (TaskId t : in_progress)
        if (!seen.insert(t).second)
            throw std::invalid_argument("vehicle " + std::to_string(raw(id)) + ": duplicate in-progress task");
}

VehicleState make_local_vehicle(VehicleId id, double capacity)
{
    VehicleState v;
    v.id = id;
    v.capacity = capacity;
    v.local = true;
    return v;
}

std::vector<VehicleId> Assignment::vehicles_of(TaskId task) const
{
    std::vector<VehicleId> out;
    auto it = entries_.lower_bound({task, VehicleId{0}});
    for (; it != entries_.end() && it->first == task; ++it)
        out.push_back(it->second);
    return out;
}

void Allocation::set(TaskId task, VehicleId vehicle, double gflops)
{
    if (gflops < 0.0)
        throw std::domain_error("allocation must be nonnegative");
    if (gflops == 0.0)
        entries_.erase({task, vehicle});
    else
        entries_[{task, vehicle}] = gflops;
}

double Allocation::at(TaskId task, VehicleId vehicle) const
{
    auto it = entries_.find({task, vehicle});
    return it == entries_.end() ? 0.0 : it->second;
}

double Allocation::vehicle_total(VehicleId vehicle) const
{
    double total = 0.0;
    for (const auto& [pair, g] : entries_)
        if (pair.second == vehicle)
            total += g;
    return total;
}

void Allocation::check(const Assignment& assignment, const std::vector<VehicleState>& vehicles) const
{
    for (const auto& pair : assignment)
        if (!(at(pair.first, pair.second) > 0.0))
            throw InconsistencyError("assigned pair without positive allocation");
    for (const auto& [pair, g] : entries_)
        if (!assignment.contains(pair.first, pair.second))
            throw InconsistencyError("allocation on an unassigned pair");
    for (const auto& v : vehicles)
        if (vehicle_total(v.id) > v.capacity * (1.0 + 1e-9))
            throw InconsistencyError("vehicle " + std::to_string(raw(v.id)) + " over capacity");
}

double round_trip_latency(const TaskSpec& task, const LinkRates& rates, double gflops)
{
    if (!(gflops > 0.0))
        throw std::domain_error("round_trip_latency: allocation must be > 0");
    if (!(rates.down_rate > 0.0) || !(rates.up_rate > 0.0))
        throw std::domain_error("round_trip_latency: link rates must be > 0");
    return task.down_bits / rates.down_rate + task.compute / gflops + task.up_bits / rates.up_rate;
}

double reliability(const VehicleState& vehicle, double latency)
{
    if (!(latency >= 0.0))
        throw std::domain_error("reliability: latency must be >= 0");
    if (vehicle.local)
        return 1.0;
    return std::exp(-vehicle.reliability_rate * latency);
}

double task_unreliability(std::span<const ReplicaLatency> row)
{
    double u = 1.0;
    for (const auto& r : row)
        u *= 1.0 - reliability(*r.vehicle, r.latency);
    return u;
}

double task_unreliability_from_success(std::span<const double> success_probabilities)
{
    double u = 1.0;
    for (double p : success_probabilities)
    {
        if (!(p >= 0.0 && p <= 1.0))
            throw std::domain_error("task_unreliability: success probability outside [0, 1]");
        u *= 1.0 - p;
    }
    return u;
}

double objective_p0(std::span<const TaskSpec> tasks, const Assignment& assignment,
                    const PairLatencies& latencies)
{
    std::unordered_set<TaskId> known;
    for (const auto& t : tasks)
        known.insert(t.id);
    double total = 0.0;
    for (const auto& pair : assignment)
    {
        if (!known.contains(pair.first))
            throw InconsistencyError("assignment refers to task " + std::to_string(raw(pair.first)) +
                                     " outside the task list");
        auto it = latencies.find(pair);
        if (it == latencies.end())
            throw InconsistencyError("no latency for assigned pair (task " + std::to_string(raw(pair.first)) +
                                     ", vehicle " + std::to_string(raw(pair.second)) + ")");
        total += it->second;
    }
    return total;
}

} // namespace cave
