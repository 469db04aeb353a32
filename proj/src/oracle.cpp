#include "cave/oracle.hpp"

#include "cave/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cave::oracle
{

namespace
{

// Golden-section search for the minimum of a unimodal f on [lo, hi].
template <typename F>
double golden_section(F f, double lo, double hi)
{
    const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo;
    double b = hi;
    double x1 = b - ratio * (b - a);
    double x2 = a + ratio * (b - a);
    double f1 = f(x1);
    double f2 = f(x2);
    const double tol = 1e-15 * (hi - lo);
    for (int it = 0; it < 300 && b - a > tol; ++it)
    {
        if (f1 < f2)
        {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = f(x1);
        }
        else
        {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = f(x2);
        }
    }
    return 0.5 * (a + b);
}

double latency_sum(const std::vector<double>& compute, const std::vector<double>& g)
{
    double s = 0.0;
    for (std::size_t i = 0; i < compute.size(); ++i)
        s += compute[i] / g[i];
    return s;
}

} // namespace

SimplexMinimum minimize_latency_sum(const std::vector<double>& compute, double capacity)
{
    if (compute.empty())
        return {};
    if (!(capacity > 0.0))
        throw std::invalid_argument("minimize_latency_sum: capacity must be > 0");

    const std::size_t n = compute.size();
    SimplexMinimum out;
    out.g.assign(n, capacity / static_cast<double>(n));
    double current = latency_sum(compute, out.g);

    for (out.sweeps = 0; out.sweeps < 1000 && n > 1; ++out.sweeps)
    {
        // Each pair moves along its own edge of the simplex, so the total stays put.
        for (std::size_t i = 0; i < n; ++i)
        {
            for (std::size_t k = i + 1; k < n; ++k)
            {
                const double s = out.g[i] + out.g[k];
                const double ci = compute[i];
                const double ck = compute[k];
                const double a =
                    golden_section([&](double x) { return ci / x + ck / (s - x); }, s * 1e-12, s * (1.0 - 1e-12));
                out.g[i] = a;
                out.g[k] = s - a;
            }
        }
        const double next = latency_sum(compute, out.g);
        const bool settled = current - next <= 1e-15 * next;
        current = std::min(current, next);
        if (settled)
            break;
    }
    out.objective = current;
    return out;
}

allocator::VehicleTaskLoad random_load(Rng& rng)
{
    allocator::VehicleTaskLoad load;
    load.vehicle = VehicleId{0};
    load.capacity = uniform(rng, 1e2, 1e5);
    const auto n = 1 + static_cast<std::size_t>(uniform01(rng) * 20.0);
    for (std::size_t i = 0; i < std::min<std::size_t>(n, 20); ++i)
        load.tasks.push_back({TaskId{i}, uniform(rng, 1.0, 1e4)});
    return load;
}

AllocationSuiteReport run_allocation_suite(std::size_t loads, std::uint64_t seed)
{
    AllocationSuiteReport report;
    report.loads = loads;
    for (std::size_t k = 0; k < loads; ++k)
    {
        Rng rng = make_rng(seed, {k});
        const auto load = random_load(rng);
        const auto closed = allocator::optimal_allocation(load);

        std::vector<double> compute;
        for (const auto& t : load.tasks)
            compute.push_back(t.compute);
        const auto reference = minimize_latency_sum(compute, load.capacity);

        const double f = allocator::compute_latency_sum(load, closed);
        report.max_gap = std::max(report.max_gap, std::abs(f - reference.objective) / reference.objective);

        const auto kkt = allocator::kkt_residual(load, closed);
        report.max_stationarity = std::max(report.max_stationarity, kkt.stationarity);
        report.max_slackness = std::max(report.max_slackness, kkt.slackness);
    }
    report.passed = report.max_gap < kAllocationTolerance && report.max_stationarity < kAllocationTolerance &&
                    report.max_slackness < kAllocationTolerance;
    return report;
}

std::vector<VehicleState> AssignmentInstance::vehicle_states() const
{
    std::vector<VehicleState> out;
    for (const auto& v : vehicles)
    {
        VehicleState s;
        s.id = v.id;
        s.capacity = v.capacity;
        s.reliability_rate = v.reliability_rate;
        for (const auto& r : v.running)
            s.in_progress.push_back(r.task);
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<assigner::InProgressReplica> AssignmentInstance::in_progress() const
{
    std::vector<assigner::InProgressReplica> out;
    for (const auto& v : vehicles)
        out.insert(out.end(), v.running.begin(), v.running.end());
    return out;
}

RatePredictor AssignmentInstance::predictor() const
{
    RatePredictor p;
    for (const auto& v : vehicles)
    {
        p.observe(v.id, Direction::Down, 0.0, v.down_aggregate, 1);
        p.observe(v.id, Direction::Up, 0.0, v.up_aggregate, 1);
        p.set_active_flows(v.id, Direction::Down, v.running.size());
        p.set_active_flows(v.id, Direction::Up, v.running.size());
    }
    return p;
}

OracleEvaluation evaluate_assignment(const AssignmentInstance& instance, const std::vector<std::uint8_t>& bits)
{
    const std::size_t tasks = instance.tasks.size();
    const std::size_t n = instance.vehicles.size();
    if (bits.size() != tasks * n)
        throw std::invalid_argument("evaluate_assignment: bit count mismatch");

    OracleEvaluation ev;
    ev.unreliability.assign(tasks, 1.0);
    for (std::size_t j = 0; j < n; ++j)
    {
        const auto& v = instance.vehicles[j];
        std::size_t extra = 0;
        for (std::size_t i = 0; i < tasks; ++i)
            extra += bits[i * n + j];

        const double sharers = static_cast<double>(std::max<std::size_t>(v.running.size() + extra, 1));
        const LinkRates rates{v.down_aggregate / sharers, v.up_aggregate / sharers};
        const double g = v.capacity / sharers;

        for (const auto& r : v.running)
            ev.p1 += r.remaining_down_bits / rates.down_rate + r.remaining_compute / g +
                     r.remaining_up_bits / rates.up_rate;

        for (std::size_t i = 0; i < tasks; ++i)
        {
            if (!bits[i * n + j])
                continue;
            const auto& t = instance.tasks[i];
            const double latency = t.down_bits / rates.down_rate + t.compute / g + t.up_bits / rates.up_rate;
            ev.p1 += latency;
            ev.unreliability[i] *= 1.0 - std::exp(-v.reliability_rate * latency);
        }
    }
    ev.feasible = true;
    for (std::size_t i = 0; i < tasks; ++i)
        ev.feasible = ev.feasible && ev.unreliability[i] <= instance.tasks[i].fail_threshold;
    return ev;
}

OracleEvaluation evaluate_assignment(const AssignmentInstance& instance, const Assignment& assignment)
{
    const std::size_t n = instance.vehicles.size();
    std::vector<std::uint8_t> bits(instance.tasks.size() * n, 0);
    for (const auto& [task, vehicle] : assignment)
    {
        auto ti = std::find_if(instance.tasks.begin(), instance.tasks.end(),
                               [&](const TaskSpec& t) { return t.id == task; });
        auto vi = std::find_if(instance.vehicles.begin(), instance.vehicles.end(),
                               [&](const OracleVehicle& v) { return v.id == vehicle; });
        if (ti == instance.tasks.end() || vi == instance.vehicles.end())
            throw InconsistencyError("evaluate_assignment: assignment names an unknown task or vehicle");
        bits[static_cast<std::size_t>(ti - instance.tasks.begin()) * n +
             static_cast<std::size_t>(vi - instance.vehicles.begin())] = 1;
    }
    return evaluate_assignment(instance, bits);
}

EnumerationResult enumerate(const AssignmentInstance& instance)
{
    const std::size_t dim = instance.tasks.size() * instance.vehicles.size();
    if (dim > 20)
        throw std::invalid_argument("enumerate: more than 20 decision bits");

    EnumerationResult out;
    std::vector<std::uint8_t> bits(dim, 0);
    for (std::uint64_t code = 0; code < (std::uint64_t{1} << dim); ++code)
    {
        for (std::size_t b = 0; b < dim; ++b)
            bits[b] = static_cast<std::uint8_t>((code >> b) & 1U);
        const auto ev = evaluate_assignment(instance, bits);
        if (!ev.feasible)
            continue;
        ++out.feasible_count;
        if (!out.any_feasible || ev.p1 < out.best_p1)
        {
            out.any_feasible = true;
            out.best_p1 = ev.p1;
            out.best_bits = bits;
        }
    }
    return out;
}

AssignmentInstance random_assignment_instance(std::uint64_t seed)
{
    for (std::uint64_t attempt = 0;; ++attempt)
    {
        Rng rng = make_rng(seed, {attempt});
        AssignmentInstance inst;
        std::uint64_t running_id = 1000;
        for (std::uint64_t j = 0; j < 3; ++j)
        {
            OracleVehicle v;
            v.id = VehicleId{j};
            v.capacity = uniform(rng, 5e3, 2e4);
            v.reliability_rate = uniform(rng, 0.5, 3.0);
            v.down_aggregate = uniform(rng, 1e6, 5e7);
            v.up_aggregate = uniform(rng, 1e6, 5e7);
            const auto running = static_cast<std::size_t>(uniform01(rng) * 3.0);
            for (std::size_t k = 0; k < std::min<std::size_t>(running, 2); ++k)
                v.running.push_back({TaskId{running_id++}, v.id, uniform(rng, 0.0, 5e4), uniform(rng, 100.0, 2000.0),
                                     uniform(rng, 0.0, 5e4)});
            inst.vehicles.push_back(std::move(v));
        }
        for (std::uint64_t i = 0; i < 2; ++i)
        {
            TaskSpec t;
            t.id = TaskId{i};
            t.compute = uniform(rng, 1000.0, 2000.0);
            t.down_bits = uniform(rng, 1e4, 1e5);
            t.up_bits = uniform(rng, 1e4, 1e5);
            t.fail_threshold = uniform(rng, 0.05, 0.4);
            inst.tasks.push_back(t);
        }
        if (enumerate(inst).any_feasible)
            return inst;
    }
}

AssignmentSuiteReport run_assignment_suite(std::size_t instances, std::uint64_t seed,
                                           const assigner::SwarmConfig& swarm)
{
    AssignmentSuiteReport report;
    report.instances = instances;
    double gap_sum = 0.0;
    std::size_t gap_count = 0;
    for (std::size_t k = 0; k < instances; ++k)
    {
        const auto inst = random_assignment_instance(derive_seed(seed, {k}));
        const auto best = enumerate(inst);

        const auto vehicles = inst.vehicle_states();
        const auto running = inst.in_progress();
        const auto predictor = inst.predictor();
        auto config = swarm;
        config.seed = derive_seed(seed, {k, 1});
        const auto result = assigner::pso_assign(inst.tasks, running, vehicles, predictor, config);

        const auto ev = evaluate_assignment(inst, result.assignment);
        if (result.feasible)
        {
            ++report.flagged_feasible;
            if (!ev.feasible)
                ++report.flag_violations;
        }
        if (ev.feasible)
        {
            const double gap = (ev.p1 - best.best_p1) / best.best_p1;
            report.max_gap = std::max(report.max_gap, gap);
            gap_sum += gap;
            ++gap_count;
            if (gap <= kAssignmentGap)
                ++report.within_tolerance;
        }
    }
    report.mean_gap = gap_count ? gap_sum / static_cast<double>(gap_count) : 0.0;
    report.passed = report.within_tolerance >= kAssignmentRequired * instances / 100 && report.flag_violations == 0;
    return report;
}

} // namespace cave::oracle
