#pragma once

#include "cave/types.hpp"

#include <vector>

namespace cave::allocator
{

struct TaskDemand
{
    TaskId task{};
    double compute = 0.0; // GFLOP still to be executed
};

// Everything one vehicle needs to split its capacity: incoming and in-progress
// tasks alike.
struct VehicleTaskLoad
{
    VehicleId vehicle{};
    std::vector<TaskDemand> tasks;
    double capacity = 0.0; // GFLOPS

    void validate() const;
};

struct TaskShare
{
    TaskId task{};
    double gflops = 0.0;
};

// Minimizes sum(C_i / g_i) subject to sum(g_i) <= capacity. The optimum uses the
// full capacity and splits it in proportion to sqrt(C_i).
std::vector<TaskShare> optimal_allocation(const VehicleTaskLoad& load);

// Capacity divided evenly across the load; used by the comparison schedulers.
std::vector<TaskShare> equal_allocation(const VehicleTaskLoad& load);

struct KktResidual
{
    double stationarity = 0.0; // max_i |-C_i / g_i^2 + lambda|
    double slackness = 0.0;    // |sum g_i - capacity|
};

// Residuals of the first-order conditions, with the multiplier recovered from
// the load as lambda = (sum sqrt(C_k) / capacity)^2. `allocation` must list the
// load's tasks in the same order. Throws std::domain_error on a zero entry.
KktResidual kkt_residual(const VehicleTaskLoad& load, const std::vector<TaskShare>& allocation);

// sum_i C_i / g_i
double compute_latency_sum(const VehicleTaskLoad& load, const std::vector<TaskShare>& allocation);

} // namespace cave::allocator
