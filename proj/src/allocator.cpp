#include "cave/allocator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cave::allocator
{

void VehicleTaskLoad::validate() const
{
    if (!(capacity > 0.0))
        throw std::invalid_argument("VehicleTaskLoad: capacity must be > 0");
    for (const auto& t : tasks)
        if (!(t.compute > 0.0))
            throw std::invalid_argument("VehicleTaskLoad: task compute must be > 0");
}

std::vector<TaskShare> optimal_allocation(const VehicleTaskLoad& load)
{
    std::vector<TaskShare> out;
    out.reserve(load.tasks.size());
    if (load.tasks.empty())
        return out;

    double root_sum = 0.0;
    for (const auto& t : load.tasks)
        root_sum += std::sqrt(t.compute);
    for (const auto& t : load.tasks)
        out.push_back({t.task, std::sqrt(t.compute) * load.capacity / root_sum});
    return out;
}

std::vector<TaskShare> equal_allocation(const VehicleTaskLoad& load)
{
    std::vector<TaskShare> out;
    out.reserve(load.tasks.size());
    const double share = load.tasks.empty() ? 0.0 : load.capacity / static_cast<double>(load.tasks.size());
    for (const auto& t : load.tasks)
        out.push_back({t.task, share});
    return out;
}

KktResidual kkt_residual(const VehicleTaskLoad& load, const std::vector<TaskShare>& allocation)
{
    if (allocation.size() != load.tasks.size())
        throw std::invalid_argument("kkt_residual: allocation does not match load");
    KktResidual r;
    if (load.tasks.empty())
        return r;

    double root_sum = 0.0;
    for (const auto& t : load.tasks)
        root_sum += std::sqrt(t.compute);
    const double lambda = (root_sum / load.capacity) * (root_sum / load.capacity);

    double total = 0.0;
    for (std::size_t i = 0; i < load.tasks.size(); ++i)
    {
        const double g = allocation[i].gflops;
        if (!(g > 0.0))
            throw std::domain_error("kkt_residual: allocation entries must be > 0");
        r.stationarity = std::max(r.stationarity, std::abs(-load.tasks[i].compute / (g * g) + lambda));
        total += g;
    }
    r.slackness = std::abs(total - load.capacity);
    return r;
}

double compute_latency_sum(const VehicleTaskLoad& load, const std::vector<TaskShare>& allocation)
{
    double total = 0.0;
    for (std::size_t i = 0; i < load.tasks.size(); ++i)
        total += load.tasks[i].compute / allocation.at(i).gflops;
    return total;
}

} // namespace cave::allocator
