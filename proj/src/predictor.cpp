#include "cave/predictor.hpp"

#include <algorithm>
#include <stdexcept>

namespace cave
{

void PredictorConfig::validate() const
{
    if (!(ewma_weight > 0.0 && ewma_weight <= 1.0))
        throw std::invalid_argument("predictor: ewma_weight must lie in (0, 1]");
    if (window == 0)
        throw std::invalid_argument("predictor: window must be >= 1");
    if (!(prior_down_rate > 0.0) || !(prior_up_rate > 0.0))
        throw std::invalid_argument("predictor: prior rates must be > 0");
}

RatePredictor::RatePredictor(PredictorConfig config) : config_(config) { config_.validate(); }

void RatePredictor::observe(VehicleId vehicle, Direction dir, double time, double rate,
                            std::size_t concurrent_flows)
{
    if (!(rate > 0.0))
        throw std::invalid_argument("observe: rate must be > 0");
    if (concurrent_flows == 0)
        throw std::invalid_argument("observe: concurrent_flows must be >= 1");
    auto& ch = channels_[{vehicle, dir}];
    if (!ch.samples.empty() && !(time > ch.samples.back().time))
        throw std::invalid_argument("observe: timestamps must be strictly increasing");

    ch.samples.push_back({time, rate, concurrent_flows});
    while (ch.samples.size() > config_.window)
        ch.samples.pop_front();

    // Smoothing is defined by the retained window alone.
    const double w = config_.ewma_weight;
    bool first = true;
    for (const auto& s : ch.samples)
    {
        const double aggregate = s.rate * static_cast<double>(s.concurrent_flows);
        ch.smoothed = first ? aggregate : w * aggregate + (1.0 - w) * ch.smoothed;
        first = false;
    }
}

void RatePredictor::set_active_flows(VehicleId vehicle, Direction dir, std::size_t flows)
{
    channels_[{vehicle, dir}].active = flows;
}

std::size_t RatePredictor::active_flows(VehicleId vehicle, Direction dir) const
{
    auto it = channels_.find({vehicle, dir});
    return it == channels_.end() ? 0 : it->second.active;
}

double RatePredictor::aggregate_rate(VehicleId vehicle, Direction dir) const
{
    auto it = channels_.find({vehicle, dir});
    if (it == channels_.end() || it->second.samples.empty())
        return dir == Direction::Down ? config_.prior_down_rate : config_.prior_up_rate;
    return it->second.smoothed;
}

double RatePredictor::predict_one(VehicleId vehicle, Direction dir, std::size_t extra, bool count_active) const
{
    const std::size_t flows = (count_active ? active_flows(vehicle, dir) : 0) + extra;
    return aggregate_rate(vehicle, dir) / static_cast<double>(std::max<std::size_t>(flows, 1));
}

LinkRates RatePredictor::predict_rates(VehicleId vehicle, std::size_t planned_extra_flows, bool count_active) const
{
    return {predict_one(vehicle, Direction::Down, planned_extra_flows, count_active),
            predict_one(vehicle, Direction::Up, planned_extra_flows, count_active)};
}

std::size_t RatePredictor::history_size(VehicleId vehicle, Direction dir) const
{
    auto it = channels_.find({vehicle, dir});
    return it == channels_.end() ? 0 : it->second.samples.size();
}

void RatePredictor::forget(VehicleId vehicle)
{
    channels_.erase({vehicle, Direction::Down});
    channels_.erase({vehicle, Direction::Up});
}

double presumed_allocation(const VehicleState& vehicle, std::size_t extra_tasks)
{
    if (extra_tasks == 0)
        throw std::invalid_argument("presumed_allocation: extra_tasks must be >= 1");
    return vehicle.capacity / static_cast<double>(vehicle.in_progress.size() + extra_tasks);
}

} // namespace cave
