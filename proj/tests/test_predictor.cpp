#include "cave/predictor.hpp"

#include <gtest/gtest.h>

using namespace cave;

namespace
{
constexpr VehicleId kV{7};
}

TEST(RatePredictor, HistoryGrowsThenEvicts)
{
    PredictorConfig cfg;
    cfg.window = 5;
    RatePredictor p(cfg);
    p.observe(kV, Direction::Down, 0.0, 1e7, 1);
    EXPECT_EQ(p.history_size(kV, Direction::Down), 1u);
    EXPECT_EQ(p.history_size(kV, Direction::Up), 0u);
    for (int k = 1; k <= 5; ++k)
        p.observe(kV, Direction::Down, k, 1e7, 1);
    EXPECT_EQ(p.history_size(kV, Direction::Down), 5u);
}

TEST(RatePredictor, RejectsNonIncreasingTime)
{
    RatePredictor p;
    p.observe(kV, Direction::Up, 1.0, 1e7, 1);
    EXPECT_THROW(p.observe(kV, Direction::Up, 1.0, 2e7, 1), std::invalid_argument);
    EXPECT_THROW(p.observe(kV, Direction::Up, 0.5, 2e7, 1), std::invalid_argument);
    EXPECT_EQ(p.history_size(kV, Direction::Up), 1u);
    // Directions keep separate clocks.
    EXPECT_NO_THROW(p.observe(kV, Direction::Down, 1.0, 1e7, 1));
}

TEST(RatePredictor, RejectsBadSamples)
{
    RatePredictor p;
    EXPECT_THROW(p.observe(kV, Direction::Up, 0.0, 0.0, 1), std::invalid_argument);
    EXPECT_THROW(p.observe(kV, Direction::Up, 0.0, 1e7, 0), std::invalid_argument);
}

TEST(RatePredictor, PriorWithoutHistory)
{
    RatePredictor p;
    const auto r = p.predict_rates(kV, 1);
    EXPECT_DOUBLE_EQ(r.down_rate, 1e7);
    EXPECT_DOUBLE_EQ(r.up_rate, 1e7);
}

TEST(RatePredictor, SharesAggregateAcrossFlows)
{
    RatePredictor p;
    p.observe(kV, Direction::Down, 0.0, 1e7, 1);
    p.observe(kV, Direction::Down, 1.0, 1e7, 1);
    p.set_active_flows(kV, Direction::Down, 1);
    EXPECT_DOUBLE_EQ(p.predict_rates(kV, 1).down_rate, 5e6);
    EXPECT_DOUBLE_EQ(p.predict_rates(kV, 1, false).down_rate, 1e7);
}

TEST(RatePredictor, OneStepEwma)
{
    PredictorConfig cfg;
    cfg.ewma_weight = 0.5;
    RatePredictor p(cfg);
    p.observe(kV, Direction::Up, 0.0, 1e7, 1);
    p.observe(kV, Direction::Up, 1.0, 2e7, 1);
    EXPECT_DOUBLE_EQ(p.predict_rates(kV, 1).up_rate, 1.5e7);
}

TEST(RatePredictor, ConstantObservationIsFixedPoint)
{
    RatePredictor p;
    for (int k = 0; k < 80; ++k)
        p.observe(kV, Direction::Down, k * 1e-3, 4e6, 3); // each of 3 flows saw 4 Mb/s
    EXPECT_NEAR(p.aggregate_rate(kV, Direction::Down), 1.2e7, 1e-3);
    p.set_active_flows(kV, Direction::Down, 2);
    EXPECT_NEAR(p.predict_rates(kV, 1).down_rate, 4e6, 1e-3);
}

TEST(RatePredictor, PredictionAlwaysPositive)
{
    RatePredictor p;
    p.observe(kV, Direction::Down, 0.0, 1.0, 1);
    for (std::size_t extra : {0u, 1u, 10u, 1000u})
    {
        const auto r = p.predict_rates(kV, extra);
        EXPECT_GT(r.down_rate, 0.0);
        EXPECT_GT(r.up_rate, 0.0);
    }
}

TEST(RatePredictor, ForgetRestoresPrior)
{
    RatePredictor p;
    p.observe(kV, Direction::Down, 0.0, 3e7, 1);
    p.forget(kV);
    EXPECT_EQ(p.history_size(kV, Direction::Down), 0u);
    EXPECT_DOUBLE_EQ(p.aggregate_rate(kV, Direction::Down), 1e7);
}

TEST(PresumedAllocation, EqualShare)
{
    VehicleState v;
    v.id = kV;
    v.capacity = 1e4;
    EXPECT_DOUBLE_EQ(presumed_allocation(v, 1), 1e4);
    EXPECT_DOUBLE_EQ(presumed_allocation(v, 2), 5000.0);
    v.in_progress = {TaskId{1}, TaskId{2}, TaskId{3}};
    EXPECT_DOUBLE_EQ(presumed_allocation(v, 1), 2500.0);
    EXPECT_THROW(presumed_allocation(v, 0), std::invalid_argument);
}

TEST(PresumedAllocation, NonIncreasing)
{
    VehicleState v;
    v.capacity = 1e4;
    double prev_k = presumed_allocation(v, 1);
    for (std::uint64_t k = 1; k < 10; ++k)
    {
        v.in_progress.push_back(TaskId{k});
        double prev_e = presumed_allocation(v, 1);
        EXPECT_LE(prev_e, prev_k);
        prev_k = prev_e;
        for (std::size_t e = 2; e < 6; ++e)
        {
            EXPECT_LE(presumed_allocation(v, e), prev_e);
            prev_e = presumed_allocation(v, e);
        }
    }
}

TEST(PredictorConfig, Validation)
{
    PredictorConfig cfg;
    cfg.ewma_weight = 0.0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.window = 0;
    EXPECT_THROW(RatePredictor{cfg}, std::invalid_argument);
}
