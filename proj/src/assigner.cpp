#include "cave/assigner.hpp"

#include "cave/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace cave::assigner
{

namespace
{

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kInitStream = ~std::uint64_t{0};

const LinkRates kIdealLink{kInf, kInf};

} // namespace

void SwarmConfig::validate() const
{
    if (particles < 2)
        throw std::invalid_argument("swarm: particles must be >= 2");
    if (iterations < 1)
        throw std::invalid_argument("swarm: iterations must be >= 1");
    if (candidate_count < 1)
        throw std::invalid_argument("swarm: candidate_count must be >= 1");
    if (!(mu0 > 0.0))
        throw std::invalid_argument("swarm: mu0 must be > 0");
    if (!(mu_decay > 0.0 && mu_decay < 1.0))
        throw std::invalid_argument("swarm: mu_decay must lie in (0, 1)");
    if (!(v_max > 0.0))
        throw std::invalid_argument("swarm: v_max must be > 0");
    if (!(inertia >= 0.0) || !(cognitive >= 0.0) || !(social >= 0.0))
        throw std::invalid_argument("swarm: inertia and acceleration weights must be >= 0");
}

double CandidateParams::success_probability(std::size_t task, std::size_t extra) const
{
    if (local)
        return 1.0;
    return std::exp(-reliability_rate * latency[task][extra - 1]);
}

Bits to_bits(const Assignment& assignment, const PredictedParams& params)
{
    const std::size_t n = params.candidate_count();
    Bits bits(params.dimension(), 0);
    for (std::size_t i = 0; i < params.task_count(); ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (assignment.contains(params.incoming[i].id, params.candidates[j].vehicle))
                bits[i * n + j] = 1;
    return bits;
}

Assignment to_assignment(const Bits& bits, const PredictedParams& params)
{
    const std::size_t n = params.candidate_count();
    Assignment a;
    for (std::size_t i = 0; i < params.task_count(); ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (bits[i * n + j])
                a.assign(params.incoming[i].id, params.candidates[j].vehicle);
    return a;
}

Evaluation evaluate(const Bits& bits, const PredictedParams& params, double mu, BarrierSign sign)
{
    const std::size_t tasks = params.task_count();
    const std::size_t n = params.candidate_count();
    if (bits.size() != tasks * n)
        throw std::invalid_argument("evaluate: bit matrix does not match the problem");

    // Replicas each candidate would receive from this batch.
    std::vector<std::size_t> extra(n, 0);
    for (std::size_t i = 0; i < tasks; ++i)
        for (std::size_t j = 0; j < n; ++j)
            extra[j] += bits[i * n + j];

    Evaluation ev;
    ev.p1 = params.fixed_in_progress_cost;
    for (std::size_t j = 0; j < n; ++j)
        if (!params.candidates[j].in_progress_cost.empty())
            ev.p1 += params.candidates[j].in_progress_cost[extra[j]];

    ev.unreliability.assign(tasks, 1.0);
    ev.feasible.assign(tasks, false);
    ev.all_feasible = true;
    double barrier = 0.0;
    bool inside = true;
    for (std::size_t i = 0; i < tasks; ++i)
    {
        double u = 1.0;
        for (std::size_t j = 0; j < n; ++j)
        {
            if (!bits[i * n + j])
                continue;
            const auto& c = params.candidates[j];
            ev.p1 += c.latency[i][extra[j] - 1];
            u *= 1.0 - c.success_probability(i, extra[j]);
        }
        const double h = params.incoming[i].fail_threshold;
        ev.unreliability[i] = u;
        ev.feasible[i] = u <= h;
        ev.all_feasible = ev.all_feasible && ev.feasible[i];
        ev.max_unreliability = std::max(ev.max_unreliability, u);
        if (u >= h)
            inside = false;
        else
            barrier += std::log(h - u);
    }

    ev.log_slack = inside ? barrier : 0.0;
    ev.objective = inside ? barrier_value(ev.p1, barrier, mu, sign) : kInf;
    return ev;
}

double barrier_value(double p1, double log_slack, double mu, BarrierSign sign) noexcept
{
    return sign == BarrierSign::Interior ? p1 - mu * log_slack : p1 + mu * log_slack;
}

double barrier_objective(const Assignment& assignment, const PredictedParams& params, double mu, BarrierSign sign)
{
    return evaluate(to_bits(assignment, params), params, mu, sign).objective;
}

double p1_objective(const Assignment& assignment, const PredictedParams& params)
{
    return evaluate(to_bits(assignment, params), params, 0.0).p1;
}

std::vector<bool> feasibility_check(const Assignment& assignment, const PredictedParams& params)
{
    return evaluate(to_bits(assignment, params), params, 0.0).feasible;
}

PredictedParams predict_params(std::span<const TaskSpec> incoming, std::span<const InProgressReplica> in_progress,
                               std::span<const VehicleState> vehicles, std::span<const VehicleId> candidates,
                               const RatePredictor& predictor, bool consider_in_progress)
{
    std::unordered_map<VehicleId, const VehicleState*> by_id;
    for (const auto& v : vehicles)
        by_id.emplace(v.id, &v);

    std::unordered_map<VehicleId, std::vector<const InProgressReplica*>> running;
    for (const auto& r : in_progress)
    {
        auto it = by_id.find(r.vehicle);
        if (it == by_id.end())
            throw InconsistencyError("in-progress replica on unknown vehicle " + std::to_string(raw(r.vehicle)));
        const auto& listed = it->second->in_progress;
        if (std::find(listed.begin(), listed.end(), r.task) == listed.end())
            throw InconsistencyError("vehicle " + std::to_string(raw(r.vehicle)) + " does not list in-progress task " +
                                     std::to_string(raw(r.task)));
        running[r.vehicle].push_back(&r);
    }

    const std::size_t tasks = incoming.size();

    // Remaining latency of a vehicle's running replicas with `extra` newcomers.
    auto running_cost = [&](const VehicleState& v, std::size_t extra) {
        auto it = running.find(v.id);
        if (it == running.end())
            return 0.0;
        const LinkRates rates = v.local ? kIdealLink : predictor.predict_rates(v.id, extra, true);
        const double g = v.capacity / static_cast<double>(std::max<std::size_t>(v.in_progress.size() + extra, 1));
        double cost = 0.0;
        for (const auto* r : it->second)
            cost += r->remaining_down_bits / rates.down_rate + r->remaining_compute / g +
                    r->remaining_up_bits / rates.up_rate;
        return cost;
    };

    PredictedParams params;
    params.incoming.assign(incoming.begin(), incoming.end());
    std::vector<bool> is_candidate_vehicle;
    for (VehicleId id : candidates)
    {
        auto it = by_id.find(id);
        if (it == by_id.end())
            throw std::invalid_argument("predict_params: unknown candidate vehicle " + std::to_string(raw(id)));
        const VehicleState& v = *it->second;

        CandidateParams c;
        c.vehicle = v.id;
        c.reliability_rate = v.reliability_rate;
        c.local = v.local;
        c.latency.assign(tasks, std::vector<double>(tasks, 0.0));
        for (std::size_t e = 1; e <= tasks; ++e)
        {
            const LinkRates rates = v.local ? kIdealLink : predictor.predict_rates(v.id, e, consider_in_progress);
            const double g = consider_in_progress ? presumed_allocation(v, e) : v.capacity / static_cast<double>(e);
            for (std::size_t i = 0; i < tasks; ++i)
                c.latency[i][e - 1] = round_trip_latency(incoming[i], rates, g);
        }
        if (consider_in_progress)
        {
            c.in_progress_cost.resize(tasks + 1);
            for (std::size_t e = 0; e <= tasks; ++e)
                c.in_progress_cost[e] = running_cost(v, e);
        }
        params.candidates.push_back(std::move(c));
    }

    if (consider_in_progress)
    {
        for (const auto& v : vehicles)
            if (std::find(candidates.begin(), candidates.end(), v.id) == candidates.end())
                params.fixed_in_progress_cost += running_cost(v, 0);
    }
    return params;
}

LatencyEstimator single_replica_estimator(const RatePredictor& predictor, bool consider_in_progress)
{
    return [&predictor, consider_in_progress](const TaskSpec& task, const VehicleState& v) {
        const LinkRates rates = v.local ? kIdealLink : predictor.predict_rates(v.id, 1, consider_in_progress);
        const double g = consider_in_progress ? presumed_allocation(v, 1) : v.capacity;
        return round_trip_latency(task, rates, g);
    };
}

std::vector<VehicleId> reduce_candidates(std::span<const VehicleState> vehicles, std::span<const TaskSpec> incoming,
                                         std::size_t n, const LatencyEstimator& estimate)
{
    if (vehicles.empty())
        throw std::invalid_argument("reduce_candidates: no vehicles available");
    if (n == 0)
        throw std::invalid_argument("reduce_candidates: n must be >= 1");

    std::vector<std::pair<double, VehicleId>> ranked;
    ranked.reserve(vehicles.size());
    for (const auto& v : vehicles)
    {
        double score = 0.0;
        for (const auto& t : incoming)
            score += estimate(t, v);
        ranked.emplace_back(score, v.id);
    }
    std::sort(ranked.begin(), ranked.end());

    std::vector<VehicleId> out;
    const std::size_t keep = std::min(n, ranked.size());
    for (std::size_t k = 0; k < keep; ++k)
        out.push_back(ranked[k].second);
    return out;
}

Swarm::Swarm(const PredictedParams& params, const SwarmConfig& config) : params_(params), config_(config)
{
    config_.validate();
    if (params_.dimension() == 0)
        throw std::invalid_argument("Swarm: empty search space");
    particles_.resize(config_.particles);
    for (std::size_t k = 0; k < particles_.size(); ++k)
    {
        Rng rng = make_rng(config_.seed, {kInitStream, k});
        randomize(particles_[k], rng);
    }
}

void Swarm::randomize(Particle& p, Rng& rng) const
{
    const std::size_t dim = params_.dimension();
    p.position.resize(dim);
    p.velocity.resize(dim);
    for (std::size_t d = 0; d < dim; ++d)
    {
        p.position[d] = uniform01(rng);
        p.velocity[d] = uniform(rng, -config_.v_max, config_.v_max);
    }
    decode(p);
    p.value = kInf;
    p.feasible = false;
}

void Swarm::decode(Particle& p) const
{
    p.bits.resize(p.position.size());
    for (std::size_t d = 0; d < p.position.size(); ++d)
        p.bits[d] = decode_bit(p.position[d]);
}

void Swarm::set_global_best(std::vector<double> position, Bits bits, double value)
{
    global_best_position_ = std::move(position);
    global_best_bits_ = std::move(bits);
    global_best_value_ = value;
}

double Swarm::rescore(const Bits& bits, double mu, double fallback) const
{
    const auto it = seen_.find(bits);
    return it == seen_.end() ? fallback : barrier_value(it->second.p1, it->second.log_slack, mu, config_.barrier_sign);
}

std::pair<Bits, double> Swarm::best_encountered(double mu) const
{
    std::pair<Bits, double> best{{}, kInf};
    for (const auto& [bits, s] : seen_)
    {
        const double v = barrier_value(s.p1, s.log_slack, mu, config_.barrier_sign);
        if (v < best.second)
            best = {bits, v};
    }
    return best;
}

void Swarm::evaluate(double mu)
{
    // Stored values were scored at an earlier barrier weight.
    for (auto& p : particles_)
        if (!p.best_bits.empty())
            p.best_value = rescore(p.best_bits, mu, p.best_value);
    if (has_global_best())
        global_best_value_ = rescore(global_best_bits_, mu, global_best_value_);
    for (const auto& p : particles_)
        if (!p.best_bits.empty() && p.best_value < global_best_value_)
            set_global_best(p.best_position, p.best_bits, p.best_value);

    for (auto& p : particles_)
    {
        const Evaluation ev = assigner::evaluate(p.bits, params_, mu, config_.barrier_sign);
        p.value = ev.objective;
        p.feasible = ev.all_feasible;

        if (ev.max_unreliability < fallback_max_u_ ||
            (ev.max_unreliability == fallback_max_u_ && ev.p1 < fallback_value_))
        {
            fallback_max_u_ = ev.max_unreliability;
            fallback_value_ = ev.p1;
            fallback_bits_ = p.bits;
        }

        if (!std::isfinite(ev.objective))
            continue;
        seen_.try_emplace(p.bits, Seen{ev.p1, ev.log_slack});
        if (ev.objective < p.best_value)
        {
            p.best_value = ev.objective;
            p.best_position = p.position;
            p.best_bits = p.bits;
        }
        if (ev.objective < global_best_value_)
            set_global_best(p.position, p.bits, ev.objective);
    }
}

void Swarm::step()
{
    const std::size_t dim = params_.dimension();
    resampled_ = 0;
    for (std::size_t k = 0; k < particles_.size(); ++k)
    {
        Particle& p = particles_[k];
        Rng rng = make_rng(config_.seed, {iteration_, k});
        if (!p.feasible)
        {
            // The personal best survives: only feasible values are ever stored.
            randomize(p, rng);
            ++resampled_;
        }

        const bool has_personal = !p.best_position.empty();
        const bool has_global = has_global_best();
        for (std::size_t d = 0; d < dim; ++d)
        {
            const double x = p.position[d];
            const double personal = has_personal ? p.best_position[d] : x;
            const double global = has_global ? global_best_position_[d] : x;
            const double r1 = uniform01(rng);
            const double r2 = uniform01(rng);
            double v = config_.inertia * p.velocity[d] + config_.cognitive * r1 * (personal - x) +
                       config_.social * r2 * (global - x);
            v = std::clamp(v, -config_.v_max, config_.v_max);
            p.velocity[d] = v;
            p.position[d] = std::clamp(x + v, 0.0, 1.0);
        }
        decode(p);
    }
    ++iteration_;
}

PsoResult pso_solve(const PredictedParams& params, const SwarmConfig& config)
{
    Swarm swarm(params, config);
    PsoResult result;
    for (const auto& c : params.candidates)
        result.candidates.push_back(c.vehicle);

    double mu = config.mu0;
    double last_mu = mu;
    result.best_history.reserve(config.iterations);
    for (std::size_t t = 0; t < config.iterations; ++t)
    {
        swarm.evaluate(mu);
        result.best_history.push_back(swarm.global_best_value());
        swarm.step();
        last_mu = mu;
        mu *= config.mu_decay;
    }

    auto [best_bits, best_value] = swarm.best_encountered(last_mu);
    result.feasible = !best_bits.empty();
    const Bits& bits = result.feasible ? best_bits : swarm.least_unreliable_bits();
    result.objective = best_value;
    result.assignment = to_assignment(bits, params);
    result.p1 = evaluate(bits, params, 0.0).p1;
    return result;
}

PsoResult pso_assign(std::span<const TaskSpec> incoming, std::span<const InProgressReplica> in_progress,
                     std::span<const VehicleState> vehicles, const RatePredictor& predictor,
                     const SwarmConfig& config)
{
    if (incoming.empty())
        throw std::invalid_argument("pso_assign: no incoming tasks");
    config.validate();
    const auto candidates = reduce_candidates(vehicles, incoming, config.candidate_count,
                                              single_replica_estimator(predictor, config.consider_in_progress));
    const PredictedParams params =
        predict_params(incoming, config.consider_in_progress ? in_progress : std::span<const InProgressReplica>{},
                       vehicles, candidates, predictor, config.consider_in_progress);
    return pso_solve(params, config);
}

} // namespace cave::assigner
