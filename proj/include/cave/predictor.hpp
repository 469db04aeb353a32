#pragma once

#include "cave/types.hpp"

#include <cstddef>
#include <deque>
#include <map>
#include <utility>

namespace cave
{

struct PredictorConfig
{
    double ewma_weight = 0.3;      // weight of the newest sample
    std::size_t window = 50;       // samples kept per (vehicle, direction)
    double prior_down_rate = 1e7;  // bits/s, aggregate link rate before any observation
    double prior_up_rate = 1e7;

    void validate() const;
};

/// Ego-side estimate of per-vehicle link rates from observed transfers.
///
/// Each observation is the per-flow rate a transfer experienced together with
/// the number of flows sharing the link at the time; the product is the
/// aggregate link rate. Predictions smooth the aggregate with an exponentially
/// weighted moving average over the retained window, then share it among the
/// flows that would be active if the planned transfers were added.
class RatePredictor
{
public:
    struct Sample
    {
        double time = 0.0;
        double rate = 0.0;
        std::size_t concurrent_flows = 1;
    };

    explicit RatePredictor(PredictorConfig config = {});

    // Throws std::invalid_argument if `time` does not exceed the last sample's
    // time for this key, or on a nonpositive rate / zero flow count.
    void observe(VehicleId vehicle, Direction dir, double time, double rate, std::size_t concurrent_flows);

    // Number of transfers currently using the link; the scheduler's view of
    // contention at decision time.
    void set_active_flows(VehicleId vehicle, Direction dir, std::size_t flows);
    std::size_t active_flows(VehicleId vehicle, Direction dir) const;

    // Smoothed aggregate rate, or the prior when nothing has been observed.
    double aggregate_rate(VehicleId vehicle, Direction dir) const;

    // Per-flow rates with `planned_extra_flows` added to the active ones. When
    // `count_active` is false the active flows are ignored.
    LinkRates predict_rates(VehicleId vehicle, std::size_t planned_extra_flows, bool count_active = true) const;

    std::size_t history_size(VehicleId vehicle, Direction dir) const;
    void forget(VehicleId vehicle);

    const PredictorConfig& config() const noexcept { return config_; }

private:
    using Key = std::pair<VehicleId, Direction>;

    struct Channel
    {
        std::deque<Sample> samples;
        double smoothed = 0.0;
        std::size_t active = 0;
    };

    double predict_one(VehicleId vehicle, Direction dir, std::size_t extra, bool count_active) const;

    PredictorConfig config_;
    std::map<Key, Channel> channels_;
};

// Equal split of the vehicle's capacity across its in-progress tasks and the
// `extra_tasks` being considered. Requires extra_tasks >= 1.
double presumed_allocation(const VehicleState& vehicle, std::size_t extra_tasks);

} // namespace cave
