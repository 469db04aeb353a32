#include "cave/allocator.hpp"
#include "cave/rng.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace cave;
using namespace cave::allocator;

namespace
{

VehicleTaskLoad load_of(std::vector<double> compute, double capacity)
{
    VehicleTaskLoad load;
    load.vehicle = VehicleId{1};
    load.capacity = capacity;
    for (std::size_t i = 0; i < compute.size(); ++i)
        load.tasks.push_back({TaskId{i}, compute[i]});
    return load;
}

double total(const std::vector<TaskShare>& shares)
{
    double s = 0.0;
    for (const auto& x : shares)
        s += x.gflops;
    return s;
}

} // namespace

TEST(OptimalAllocation, SingleTaskTakesAll)
{
    const auto g = optimal_allocation(load_of({1234.0}, 1e4));
    ASSERT_EQ(g.size(), 1u);
    EXPECT_DOUBLE_EQ(g[0].gflops, 1e4);
}

TEST(OptimalAllocation, SquareRootSplit)
{
    const auto g = optimal_allocation(load_of({100.0, 400.0}, 1e4));
    ASSERT_EQ(g.size(), 2u);
    EXPECT_NEAR(g[0].gflops, 1e4 / 3.0, 1e-9);
    EXPECT_NEAR(g[1].gflops, 2e4 / 3.0, 1e-9);
}

TEST(OptimalAllocation, EqualDemandsSplitEvenly)
{
    const auto g = optimal_allocation(load_of({500, 500, 500, 500, 500}, 1e4));
    for (const auto& s : g)
        EXPECT_NEAR(s.gflops, 2000.0, 1e-9);
}

TEST(OptimalAllocation, UsesFullCapacity)
{
    Rng rng = make_rng(21, {});
    for (int k = 0; k < 200; ++k)
    {
        std::vector<double> c(1 + k % 20);
        for (auto& x : c)
            x = uniform(rng, 1, 1e4);
        const double cap = uniform(rng, 1e2, 1e5);
        EXPECT_NEAR(total(optimal_allocation(load_of(c, cap))), cap, 1e-9 * cap);
    }
}

TEST(OptimalAllocation, ScaleEquivariant)
{
    const auto load = load_of({10, 250, 999, 4000}, 3000);
    auto scaled = load;
    scaled.capacity *= 7.5;
    const auto a = optimal_allocation(load);
    const auto b = optimal_allocation(scaled);
    for (std::size_t i = 0; i < a.size(); ++i)
        EXPECT_NEAR(b[i].gflops, 7.5 * a[i].gflops, 1e-9 * b[i].gflops);
}

TEST(OptimalAllocation, PermutationEquivariant)
{
    auto load = load_of({10, 250, 999, 4000, 3}, 3000);
    const auto a = optimal_allocation(load);
    std::reverse(load.tasks.begin(), load.tasks.end());
    const auto b = optimal_allocation(load);
    for (const auto& share : a)
    {
        auto it = std::find_if(b.begin(), b.end(), [&](const TaskShare& s) { return s.task == share.task; });
        ASSERT_NE(it, b.end());
        EXPECT_NEAR(it->gflops, share.gflops, 1e-9 * share.gflops);
    }
}

TEST(OptimalAllocation, BeatsEqualSplit)
{
    const auto load = load_of({100, 400, 1600}, 1e4);
    EXPECT_LT(compute_latency_sum(load, optimal_allocation(load)), compute_latency_sum(load, equal_allocation(load)));
}

TEST(KktResidual, ClosedFormSatisfiesConditions)
{
    const auto load = load_of({100.0, 400.0}, 1e4);
    const auto r = kkt_residual(load, optimal_allocation(load));
    EXPECT_LT(r.stationarity, 1e-6);
    EXPECT_LT(r.slackness, 1e-6);
}

TEST(KktResidual, EqualSplitIsNotStationary)
{
    const auto load = load_of({100.0, 400.0}, 1e4);
    const auto r = kkt_residual(load, equal_allocation(load));
    EXPECT_GT(r.stationarity, 0.0);
    EXPECT_LT(r.slackness, 1e-9);
}

TEST(KktResidual, EmptyLoadIsVacuous)
{
    const auto r = kkt_residual(load_of({}, 1e4), {});
    EXPECT_EQ(r.stationarity, 0.0);
    EXPECT_EQ(r.slackness, 0.0);
}

TEST(KktResidual, ZeroEntryRejected)
{
    const auto load = load_of({100.0, 400.0}, 1e4);
    std::vector<TaskShare> g{{TaskId{0}, 1e4}, {TaskId{1}, 0.0}};
    EXPECT_THROW(kkt_residual(load, g), std::domain_error);
}

TEST(VehicleTaskLoad, Validation)
{
    EXPECT_THROW(load_of({100.0}, 0.0).validate(), std::invalid_argument);
    EXPECT_THROW(load_of({-1.0}, 1e4).validate(), std::invalid_argument);
}
