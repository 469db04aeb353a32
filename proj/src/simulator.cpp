#include "cave/simulator.hpp"

#include "cave/allocator.hpp"
#include "cave/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace cave::sim
{

namespace
{

// Stream identifiers under the scenario seed.
constexpr std::uint64_t kArrivalStream = 1;
constexpr std::uint64_t kMobilityStream = 2;
constexpr std::uint64_t kOutcomeStream = 3;
constexpr std::uint64_t kSchedulerStream = 4;

const Vec2 kEgo{0.0, 0.0};

// Applies `rate` for at most `budget` seconds and returns the time consumed.
double progress(double& remaining, double& deducted, double rate, double budget)
{
    if (!(remaining > 0.0))
    {
        remaining = 0.0;
        return 0.0;
    }
    if (!(rate > 0.0) || !(budget > 0.0))
        return 0.0;
    const double reachable = rate * budget;
    if (remaining <= reachable)
    {
        const double used = std::min(remaining / rate, budget);
        deducted += remaining;
        remaining = 0.0;
        return used;
    }
    remaining -= reachable;
    deducted += reachable;
    return budget;
}

void require(bool ok, const char* message)
{
    if (!ok)
        throw std::invalid_argument(std::string("scenario: ") + message);
}

} // namespace

std::string_view to_string(SchedulerKind kind) noexcept
{
    switch (kind)
    {
    case SchedulerKind::Cave: return "cave";
    case SchedulerKind::Baseline: return "baseline";
    case SchedulerKind::FpsoMr: return "fpso_mr";
    }
    return "unknown";
}

SchedulerKind parse_scheduler(std::string_view name)
{
    if (name == "cave")
        return SchedulerKind::Cave;
    if (name == "baseline")
        return SchedulerKind::Baseline;
    if (name == "fpso_mr")
        return SchedulerKind::FpsoMr;
    throw std::invalid_argument("unknown scheduler '" + std::string(name) + "' (expected cave|baseline|fpso_mr)");
}

std::string_view to_string(Phase phase) noexcept
{
    switch (phase)
    {
    case Phase::Down: return "down";
    case Phase::Compute: return "compute";
    case Phase::Up: return "up";
    case Phase::Done: return "done";
    case Phase::Failed: return "failed";
    }
    return "unknown";
}

std::string_view to_string(Outcome outcome) noexcept
{
    switch (outcome)
    {
    case Outcome::Pending: return "pending";
    case Outcome::Success: return "success";
    case Outcome::Failure: return "failure";
    case Outcome::Censored: return "censored";
    }
    return "unknown";
}

void ScenarioConfig::validate() const
{
    require(slot_dt > 0.0, "slot_dt must be > 0");
    require(duration >= 0.0, "duration must be >= 0");
    require(n_vehicles >= 1, "n_vehicles must be >= 1");
    require(spawn_radius > 0.0 && spawn_radius < kCoverageRadius, "spawn_radius must lie in (0, 300) m");
    require(bandwidth > 0.0, "bandwidth must be > 0");
    require(std::isfinite(tx_power), "tx_power must be finite");
    require(arrival_intensity >= 0.0, "arrival_intensity must be >= 0");
    require(size_range.lo >= 0.0 && size_range.lo <= size_range.hi, "size_range must be a nonempty range of sizes >= 0");
    require(compute_range.lo > 0.0 && compute_range.lo <= compute_range.hi,
            "compute_range must be a nonempty range of positive values");
    require(capacity > 0.0, "capacity must be > 0");
    require(fail_threshold > 0.0 && fail_threshold <= 1.0, "fail_threshold must lie in (0, 1]");
    require(reliability_rate > 0.0, "reliability_rate must be > 0");
    swarm.validate();
    predictor.validate();
}

double link_rate(Vec2 ego_pos, Vec2 vehicle_pos, double bandwidth, double tx_power_dbm, std::size_t concurrent_flows)
{
    const double d = std::max(norm(vehicle_pos - ego_pos), 1.0);
    const double path_loss_db = 32.4 + 21.0 * std::log10(d) + 20.0 * std::log10(kCarrierGhz);
    const double noise_dbm = kThermalNoiseDbmPerHz + 10.0 * std::log10(bandwidth) + kNoiseFigureDb;
    const double snr = std::pow(10.0, (tx_power_dbm - path_loss_db - noise_dbm) / 10.0);
    const double flows = static_cast<double>(std::max<std::size_t>(concurrent_flows, 1));
    return bandwidth * std::log2(1.0 + snr) / flows;
}

std::vector<TaskSpec> spawn_tasks(Rng& rng, double intensity, double slot_dt, const TaskSizeRanges& ranges,
                                  double now, double fail_threshold, std::uint64_t& next_id)
{
    std::vector<TaskSpec> out;
    const double mean = intensity * slot_dt;
    if (!(mean > 0.0))
        return out;
    std::poisson_distribution<std::uint32_t> count(mean);
    const std::uint32_t n = count(rng);
    out.reserve(n);
    for (std::uint32_t k = 0; k < n; ++k)
    {
        TaskSpec t;
        t.id = TaskId{next_id++};
        t.arrival_time = now;
        t.down_bits = uniform(rng, ranges.size.lo, ranges.size.hi);
        t.up_bits = uniform(rng, ranges.size.lo, ranges.size.hi);
        t.compute = uniform(rng, ranges.compute.lo, ranges.compute.hi);
        t.fail_threshold = fail_threshold;
        out.push_back(t);
    }
    return out;
}

bool TaskRecord::all_terminal() const noexcept
{
    return std::all_of(replicas.begin(), replicas.end(), [](const ReplicaRecord& r) { return r.terminal(); });
}

void realize_outcome(TaskRecord& task, Rng& rng)
{
    if (!task.all_terminal())
        throw std::logic_error("realize_outcome: task " + std::to_string(raw(task.spec.id)) + " still in flight");

    double u = 1.0;
    bool any = false;
    double best = std::numeric_limits<double>::infinity();
    for (auto& r : task.replicas)
    {
        double p = 0.0;
        if (r.phase == Phase::Done)
        {
            VehicleState v;
            v.reliability_rate = r.reliability_rate;
            v.local = r.local;
            p = reliability(v, r.latency());
        }
        // Every replica consumes a draw so the stream does not depend on phases.
        const double draw = uniform01(rng);
        r.succeeded = r.phase == Phase::Done && draw < p;
        u *= 1.0 - p;
        if (r.succeeded)
        {
            any = true;
            best = std::min(best, r.latency());
        }
    }
    task.realized_unreliability = u;
    task.outcome = any ? Outcome::Success : Outcome::Failure;
    task.latency = any ? best : 0.0;
}

double percentile(std::vector<double> values, double q)
{
    if (values.empty())
        return 0.0;
    std::sort(values.begin(), values.end());
    const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

MetricsReport summarize(std::span<const TaskRecord> tasks, SchedulerKind scheduler, std::uint64_t seed)
{
    MetricsReport m;
    m.scheduler = std::string(to_string(scheduler));
    m.seed = seed;
    m.dispatched = tasks.size();

    std::vector<double> latencies;
    std::size_t terminal = 0;
    std::size_t under = 0;
    std::size_t predicted_under = 0;
    std::size_t infeasible = 0;
    double redundancy = 0.0;
    double realized = 0.0;
    double predicted = 0.0;
    for (const auto& t : tasks)
    {
        TaskRow row;
        row.id = t.spec.id;
        row.arrival_s = t.spec.arrival_time;
        row.redundancy = t.replicas.size();
        row.outcome = t.outcome == Outcome::Pending ? Outcome::Censored : t.outcome;
        if (t.outcome == Outcome::Success)
        {
            row.latency_s = t.latency;
            latencies.push_back(t.latency);
            ++m.succeeded;
        }
        if (t.outcome == Outcome::Failure)
            ++m.failed;
        if (row.outcome == Outcome::Censored)
            ++m.censored;
        else
        {
            row.unreliability = t.realized_unreliability;
            ++terminal;
            realized += t.realized_unreliability;
            if (t.realized_unreliability <= t.spec.fail_threshold)
                ++under;
        }
        redundancy += static_cast<double>(t.replicas.size());
        predicted += t.predicted_unreliability;
        if (t.predicted_unreliability <= t.spec.fail_threshold)
            ++predicted_under;
        if (!t.assignment_feasible)
            ++infeasible;
        m.rows.push_back(row);
    }

    auto ratio = [](double num, std::size_t den) { return den == 0 ? 0.0 : num / static_cast<double>(den); };
    double latency_sum = 0.0;
    for (double l : latencies)
        latency_sum += l;
    m.mean_latency_s = ratio(latency_sum, latencies.size());
    m.p50_latency_s = percentile(latencies, 0.5);
    m.p80_latency_s = percentile(latencies, 0.8);
    m.p95_latency_s = percentile(latencies, 0.95);
    m.frac_under_threshold = ratio(static_cast<double>(under), terminal);
    m.mean_redundancy = ratio(redundancy, tasks.size());
    m.mean_realized_unreliability = ratio(realized, terminal);
    m.mean_predicted_unreliability = ratio(predicted, tasks.size());
    m.frac_predicted_under_threshold = ratio(static_cast<double>(predicted_under), tasks.size());
    m.frac_assignment_infeasible = ratio(static_cast<double>(infeasible), tasks.size());
    return m;
}

Assignment assign_baseline(const TaskSpec& task, std::span<const VehicleState> vehicles)
{
    if (vehicles.empty())
        throw std::invalid_argument("assign_baseline: no vehicles available");
    const VehicleState* best = &vehicles.front();
    for (const auto& v : vehicles)
    {
        const auto load = v.in_progress.size();
        const auto best_load = best->in_progress.size();
        if (load < best_load || (load == best_load && v.id < best->id))
            best = &v;
    }
    Assignment a;
    a.assign(task.id, best->id);
    return a;
}

assigner::PsoResult assign_fpso_mr(std::span<const TaskSpec> incoming, std::span<const VehicleState> vehicles,
                                   const RatePredictor& predictor, assigner::SwarmConfig config)
{
    config.consider_in_progress = false;
    return assigner::pso_assign(incoming, {}, vehicles, predictor, config);
}

Simulation::Simulation(ScenarioConfig config)
    : config_(std::move(config)),
      arrival_rng_(make_rng(config_.seed, {kArrivalStream})),
      mobility_rng_(make_rng(config_.seed, {kMobilityStream})),
      predictor_(config_.predictor)
{
    config_.validate();
    total_slots_ = static_cast<std::size_t>(std::llround(config_.duration / config_.slot_dt));
    vehicles_.reserve(config_.n_vehicles);
    for (std::size_t k = 0; k < config_.n_vehicles; ++k)
        vehicles_.push_back(spawn_vehicle());
}

Simulation::Simulation(ScenarioConfig config, std::vector<VehicleState> vehicles)
    : config_(std::move(config)),
      arrival_rng_(make_rng(config_.seed, {kArrivalStream})),
      mobility_rng_(make_rng(config_.seed, {kMobilityStream})),
      predictor_(config_.predictor)
{
    if (vehicles.empty())
        throw std::invalid_argument("Simulation: empty fleet");
    config_.n_vehicles = vehicles.size();
    config_.validate();
    total_slots_ = static_cast<std::size_t>(std::llround(config_.duration / config_.slot_dt));
    for (auto& v : vehicles)
    {
        v.validate();
        if (!v.in_progress.empty())
            throw std::invalid_argument("Simulation: initial vehicles must be idle");
        next_vehicle_id_ = std::max(next_vehicle_id_, raw(v.id) + 1);
        vehicles_.push_back({std::move(v), {}});
    }
}

SimVehicle Simulation::spawn_vehicle()
{
    SimVehicle v;
    v.state.id = VehicleId{next_vehicle_id_++};
    const double r = config_.spawn_radius * std::sqrt(uniform01(mobility_rng_));
    const double theta = 2.0 * std::numbers::pi * uniform01(mobility_rng_);
    v.state.position = {r * std::cos(theta), r * std::sin(theta)};
    const double speed = uniform(mobility_rng_, kSpeedRange.lo, kSpeedRange.hi);
    const double heading = 2.0 * std::numbers::pi * uniform01(mobility_rng_);
    v.state.velocity = {speed * std::cos(heading), speed * std::sin(heading)};
    v.state.capacity = config_.capacity;
    v.state.reliability_rate = config_.reliability_rate;
    return v;
}

SimVehicle* Simulation::find_vehicle(VehicleId id)
{
    for (auto& v : vehicles_)
        if (v.state.id == id)
            return &v;
    return nullptr;
}

void Simulation::set_velocity(VehicleId vehicle, Vec2 velocity)
{
    SimVehicle* v = find_vehicle(vehicle);
    if (v == nullptr)
        throw std::invalid_argument("set_velocity: unknown vehicle");
    v->state.velocity = velocity;
}

std::vector<VehicleState> Simulation::vehicle_states() const
{
    std::vector<VehicleState> out;
    out.reserve(vehicles_.size());
    for (const auto& v : vehicles_)
        out.push_back(v.state);
    return out;
}

std::vector<assigner::InProgressReplica> Simulation::in_progress_replicas() const
{
    std::vector<assigner::InProgressReplica> out;
    for (const auto& v : vehicles_)
        for (auto [ti, ri] : v.replicas)
        {
            const auto& t = tasks_[ti];
            const auto& r = t.replicas[ri];
            assigner::InProgressReplica ip;
            ip.task = t.spec.id;
            ip.vehicle = r.vehicle;
            ip.remaining_down_bits = r.remaining_down;
            ip.remaining_compute = r.remaining_compute;
            ip.remaining_up_bits = r.remaining_up;
            out.push_back(ip);
        }
    return out;
}

void Simulation::refresh_flow_counts()
{
    for (const auto& v : vehicles_)
    {
        std::size_t down = 0;
        std::size_t up = 0;
        for (auto [ti, ri] : v.replicas)
        {
            const Phase p = tasks_[ti].replicas[ri].phase;
            down += p == Phase::Down;
            up += p == Phase::Up;
        }
        predictor_.set_active_flows(v.state.id, Direction::Down, down);
        predictor_.set_active_flows(v.state.id, Direction::Up, up);
    }
}

void Simulation::schedule(std::vector<TaskSpec> incoming)
{
    refresh_flow_counts();
    const auto states = vehicle_states();
    const auto running = in_progress_replicas();

    Assignment assignment;
    std::vector<bool> feasible(incoming.size(), true);
    std::vector<VehicleId> fallback_order;

    if (config_.scheduler == SchedulerKind::Baseline)
    {
        auto view = states;
        for (const auto& t : incoming)
        {
            const Assignment single = assign_baseline(t, view);
            for (const auto& pair : single)
            {
                assignment.assign(pair.first, pair.second);
                for (auto& v : view)
                    if (v.id == pair.second)
                        v.in_progress.push_back(t.id);
            }
        }
    }
    else
    {
        assigner::SwarmConfig swarm = config_.swarm;
        swarm.seed = derive_seed(config_.seed, {kSchedulerStream, scheduler_calls_++});
        const assigner::PsoResult result =
            config_.scheduler == SchedulerKind::Cave
                ? assigner::pso_assign(incoming, running, states, predictor_, swarm)
                : assign_fpso_mr(incoming, states, predictor_, swarm);
        assignment = result.assignment;
        feasible.assign(incoming.size(), result.feasible);
        fallback_order = result.candidates;
    }

    // Best-effort results may leave a task without replicas; every dispatched
    // task runs somewhere.
    for (const auto& t : incoming)
        if (assignment.redundancy(t.id) == 0)
        {
            const VehicleId v = fallback_order.empty() ? assign_baseline(t, states).begin()->second
                                                       : fallback_order.front();
            assignment.assign(t.id, v);
        }

    // Unreliability of the final decision as the ego predicts it: predicted
    // rates, equal split with the in-progress tasks.
    std::vector<VehicleId> used;
    for (const auto& pair : assignment)
        if (std::find(used.begin(), used.end(), pair.second) == used.end())
            used.push_back(pair.second);
    const auto params = assigner::predict_params(incoming, running, states, used, predictor_, true);
    const auto ev = assigner::evaluate(assigner::to_bits(assignment, params), params, 0.0);

    for (std::size_t i = 0; i < incoming.size(); ++i)
    {
        Assignment own;
        for (VehicleId v : assignment.vehicles_of(incoming[i].id))
            own.assign(incoming[i].id, v);
        dispatch(incoming[i], own, ev.unreliability[i], feasible[i]);
    }
}

void Simulation::dispatch(const TaskSpec& task, const Assignment& assignment, double predicted, bool feasible)
{
    task.validate();
    TaskRecord rec;
    rec.spec = task;
    rec.predicted_unreliability = predicted;
    rec.assignment_feasible = feasible;
    const std::size_t ti = tasks_.size();
    for (VehicleId vid : assignment.vehicles_of(task.id))
    {
        SimVehicle* v = find_vehicle(vid);
        if (v == nullptr)
            throw InconsistencyError("dispatch to unknown vehicle " + std::to_string(raw(vid)));
        ReplicaRecord r;
        r.vehicle = vid;
        r.reliability_rate = v->state.reliability_rate;
        r.local = v->state.local;
        r.remaining_down = v->state.local ? 0.0 : task.down_bits;
        r.remaining_compute = task.compute;
        r.remaining_up = v->state.local ? 0.0 : task.up_bits;
        r.dispatch_time = now();
        v->replicas.emplace_back(ti, rec.replicas.size());
        v->state.in_progress.push_back(task.id);
        rec.replicas.push_back(r);
    }
    if (rec.replicas.empty())
        throw InconsistencyError("dispatch: task " + std::to_string(raw(task.id)) + " has no replica");
    tasks_.push_back(std::move(rec));
    pending_.push_back(ti);
}

void Simulation::release(SimVehicle& vehicle, std::size_t task, std::size_t replica)
{
    auto& reps = vehicle.replicas;
    reps.erase(std::remove(reps.begin(), reps.end(), std::pair{task, replica}), reps.end());
    auto& ids = vehicle.state.in_progress;
    ids.erase(std::remove(ids.begin(), ids.end(), tasks_[task].spec.id), ids.end());
}

void Simulation::advance_slot()
{
    const double t0 = now();
    const double dt = config_.slot_dt;
    const bool kkt = config_.scheduler == SchedulerKind::Cave;

    for (auto& v : vehicles_)
    {
        // Time left in this slot for each hosted replica.
        std::vector<double> budget(v.replicas.size(), dt);
        auto replica = [&](std::size_t k) -> ReplicaRecord& {
            return tasks_[v.replicas[k].first].replicas[v.replicas[k].second];
        };
        auto finish_time = [&](std::size_t k) { return t0 + (dt - budget[k]); };

        // Downlink.
        std::size_t flows = 0;
        for (std::size_t k = 0; k < v.replicas.size(); ++k)
            flows += replica(k).phase == Phase::Down;
        if (flows > 0)
        {
            const double rate = v.state.local ? std::numeric_limits<double>::infinity()
                                              : link_rate(kEgo, v.state.position, config_.bandwidth,
                                                          config_.tx_power, flows);
            for (std::size_t k = 0; k < v.replicas.size(); ++k)
            {
                auto& r = replica(k);
                if (r.phase != Phase::Down)
                    continue;
                const double before = r.deducted_down;
                budget[k] -= progress(r.remaining_down, r.deducted_down, rate, budget[k]);
                audit_.bits_transmitted += r.deducted_down - before;
                if (r.remaining_down == 0.0)
                {
                    r.phase = Phase::Compute;
                    r.down_end = finish_time(k);
                }
            }
            if (!v.state.local)
                predictor_.observe(v.state.id, Direction::Down, t0, rate, flows);
        }

        // Compute: reallocate over everything currently computing.
        allocator::VehicleTaskLoad load;
        load.vehicle = v.state.id;
        load.capacity = v.state.capacity;
        std::vector<std::size_t> computing;
        for (std::size_t k = 0; k < v.replicas.size(); ++k)
        {
            auto& r = replica(k);
            r.allocation = 0.0;
            if (r.phase == Phase::Compute)
            {
                computing.push_back(k);
                load.tasks.push_back({tasks_[v.replicas[k].first].spec.id, r.remaining_compute});
            }
        }
        if (!computing.empty())
        {
            const auto shares = kkt ? allocator::optimal_allocation(load) : allocator::equal_allocation(load);
            double total = 0.0;
            for (std::size_t c = 0; c < computing.size(); ++c)
            {
                const std::size_t k = computing[c];
                auto& r = replica(k);
                r.allocation = shares[c].gflops;
                total += r.allocation;
                const double before = r.deducted_compute;
                budget[k] -= progress(r.remaining_compute, r.deducted_compute, r.allocation, budget[k]);
                audit_.gflop_computed += r.deducted_compute - before;
                if (r.remaining_compute == 0.0)
                {
                    r.phase = Phase::Up;
                    r.compute_end = finish_time(k);
                }
            }
            audit_.max_allocation_ratio = std::max(audit_.max_allocation_ratio, total / v.state.capacity);
        }

        // Uplink.
        flows = 0;
        for (std::size_t k = 0; k < v.replicas.size(); ++k)
            flows += replica(k).phase == Phase::Up;
        if (flows > 0)
        {
            const double rate = v.state.local ? std::numeric_limits<double>::infinity()
                                              : link_rate(kEgo, v.state.position, config_.bandwidth,
                                                          config_.tx_power, flows);
            for (std::size_t k = 0; k < v.replicas.size(); ++k)
            {
                auto& r = replica(k);
                if (r.phase != Phase::Up)
                    continue;
                const double before = r.deducted_up;
                budget[k] -= progress(r.remaining_up, r.deducted_up, rate, budget[k]);
                audit_.bits_transmitted += r.deducted_up - before;
                if (r.remaining_up == 0.0)
                {
                    r.phase = Phase::Done;
                    r.up_end = finish_time(k);
                }
            }
            if (!v.state.local)
                predictor_.observe(v.state.id, Direction::Up, t0, rate, flows);
        }

        // Finished replicas leave the vehicle.
        std::vector<std::pair<std::size_t, std::size_t>> done;
        for (auto [ti, ri] : v.replicas)
            if (tasks_[ti].replicas[ri].phase == Phase::Done)
                done.emplace_back(ti, ri);
        for (auto [ti, ri] : done)
            release(v, ti, ri);
    }
}

void Simulation::move_vehicles()
{
    const double dt = config_.slot_dt;
    for (std::size_t k = 0; k < vehicles_.size(); ++k)
    {
        auto& s = vehicles_[k].state;
        if (s.local)
            continue;
        const double before = norm(s.position - kEgo);
        s.position = s.position + dt * s.velocity;
        const double after = norm(s.position - kEgo);
        const double speed = norm(s.velocity);
        if (speed > 0.0)
            audit_.max_step_ratio = std::max(audit_.max_step_ratio, std::abs(after - before) / (speed * dt));
        if (after > kCoverageRadius)
            depart(k);
    }
}

void Simulation::depart(std::size_t index)
{
    auto& v = vehicles_[index];
    const double t = now() + config_.slot_dt;
    for (auto [ti, ri] : v.replicas)
    {
        auto& r = tasks_[ti].replicas[ri];
        r.phase = Phase::Failed;
        r.failed_at = t;
    }
    predictor_.forget(v.state.id);
    ++audit_.departures;
    vehicles_[index] = spawn_vehicle();
}

void Simulation::realize_finished()
{
    std::vector<std::size_t> still;
    for (std::size_t ti : pending_)
    {
        auto& t = tasks_[ti];
        if (!t.all_terminal())
        {
            still.push_back(ti);
            continue;
        }
        Rng rng = make_rng(config_.seed, {kOutcomeStream, raw(t.spec.id)});
        realize_outcome(t, rng);
    }
    pending_ = std::move(still);
}

void Simulation::step()
{
    if (finished())
        return;
    auto arrivals = spawn_tasks(arrival_rng_, config_.arrival_intensity, config_.slot_dt,
                                {config_.size_range, config_.compute_range}, now(), config_.fail_threshold,
                                next_task_id_);
    if (!arrivals.empty())
        schedule(std::move(arrivals));
    advance_slot();
    move_vehicles();
    realize_finished();
    ++slot_;
    ++audit_.slots;
}

void Simulation::run_to_end()
{
    while (!finished())
        step();
}

MetricsReport Simulation::report() const { return summarize(tasks_, config_.scheduler, config_.seed); }

MetricsReport run(const ScenarioConfig& config)
{
    Simulation sim(config);
    sim.run_to_end();
    return sim.report();
}

} // namespace cave::sim
