#pragma once

#include "cave/predictor.hpp"
#include "cave/rng.hpp"
#include "cave/types.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <utility>
#include <span>
#include <vector>

namespace cave::assigner
{

enum class BarrierSign : std::uint8_t
{
    Interior, // objective - mu * sum ln(H - U): penalizes approaching the boundary
    Literal,  // objective + mu * sum ln(H - U)
};

struct SwarmConfig
{
    std::size_t particles = 30;
    std::size_t iterations = 100;
    double inertia = 0.7;
    double cognitive = 1.5;
    double social = 1.5;
    std::size_t candidate_count = 10;
    double mu0 = 1.0;
    double mu_decay = 0.9;
    double v_max = 0.5;
    std::uint64_t seed = 1;
    BarrierSign barrier_sign = BarrierSign::Interior;
    // false reproduces a scheduler that ignores tasks already dispatched: no
    // in-progress latency term, and vehicles look idle to the predictions.
    bool consider_in_progress = true;

    void validate() const;
};

/// A replica that is already running somewhere; its assignment is frozen but it
/// still shares the vehicle with whatever gets assigned next.
struct InProgressReplica
{
    TaskId task{};
    VehicleId vehicle{};
    double remaining_down_bits = 0.0;
    double remaining_compute = 0.0;
    double remaining_up_bits = 0.0;
};

/// Predicted quantities for one candidate vehicle, tabulated by the number of
/// new replicas `e` the vehicle would receive from the current batch.
struct CandidateParams
{
    VehicleId vehicle{};
    double reliability_rate = 1.0;
    bool local = false;
    // latency[i][e - 1]: round-trip latency of incoming task i, e = 1..|I|.
    std::vector<std::vector<double>> latency;
    // in_progress_cost[e]: summed remaining latency of the vehicle's in-progress
    // replicas, e = 0..|I|.
    std::vector<double> in_progress_cost;

    double success_probability(std::size_t task, std::size_t extra) const;
};

struct PredictedParams
{
    std::vector<TaskSpec> incoming;
    std::vector<CandidateParams> candidates;
    // Latency of in-progress replicas on vehicles outside the candidate set.
    double fixed_in_progress_cost = 0.0;

    std::size_t task_count() const noexcept { return incoming.size(); }
    std::size_t candidate_count() const noexcept { return candidates.size(); }
    std::size_t dimension() const noexcept { return incoming.size() * candidates.size(); }
};

/// Row-major task x candidate bit matrix over a PredictedParams instance.
using Bits = std::vector<std::uint8_t>;

Bits to_bits(const Assignment& assignment, const PredictedParams& params);
Assignment to_assignment(const Bits& bits, const PredictedParams& params);

struct Evaluation
{
    double p1 = 0.0;          // latency sum over incoming and in-progress replicas
    double objective = 0.0;   // barrier-augmented; +inf when any task violates its threshold
    std::vector<double> unreliability; // per incoming task
    std::vector<bool> feasible;        // U_i <= H_i per incoming task
    bool all_feasible = false;
    double max_unreliability = 0.0;
    double log_slack = 0.0; // sum_i ln(H_i - U_i); meaningful only when objective is finite
};

// Barrier-augmented value from its two parts.
double barrier_value(double p1, double log_slack, double mu, BarrierSign sign) noexcept;

Evaluation evaluate(const Bits& bits, const PredictedParams& params, double mu,
                    BarrierSign sign = BarrierSign::Interior);

double barrier_objective(const Assignment& assignment, const PredictedParams& params, double mu,
                         BarrierSign sign = BarrierSign::Interior);

// Unconstrained latency objective; finite for every assignment.
double p1_objective(const Assignment& assignment, const PredictedParams& params);

std::vector<bool> feasibility_check(const Assignment& assignment, const PredictedParams& params);

/// Builds the prediction tables for `candidates` (a subset of `vehicles`).
/// Throws InconsistencyError if an in-progress replica names a vehicle that does
/// not list it.
PredictedParams predict_params(std::span<const TaskSpec> incoming, std::span<const InProgressReplica> in_progress,
                               std::span<const VehicleState> vehicles, std::span<const VehicleId> candidates,
                               const RatePredictor& predictor, bool consider_in_progress = true);

using LatencyEstimator = std::function<double(const TaskSpec&, const VehicleState&)>;

// Single replica, one extra flow, equal split with the in-progress tasks.
LatencyEstimator single_replica_estimator(const RatePredictor& predictor, bool consider_in_progress = true);

// The min(n, |vehicles|) vehicles with the lowest summed single-replica latency
// over the incoming tasks; ties broken by id. Throws std::invalid_argument on an
// empty vehicle set or n == 0.
std::vector<VehicleId> reduce_candidates(std::span<const VehicleState> vehicles, std::span<const TaskSpec> incoming,
                                         std::size_t n, const LatencyEstimator& estimate);

struct Particle
{
    std::vector<double> position; // in [0, 1]
    std::vector<double> velocity; // |v| <= v_max
    Bits bits;
    double value = std::numeric_limits<double>::infinity();
    bool feasible = false;

    std::vector<double> best_position;
    Bits best_bits;
    double best_value = std::numeric_limits<double>::infinity(); // +inf: no feasible best yet
};

inline constexpr std::uint8_t decode_bit(double x) noexcept { return x > 0.5 ? 1 : 0; }

/// Binary swarm over a fixed PredictedParams instance. Randomness comes from a
/// generator derived per (iteration, particle), so evaluation order does not
/// affect the outcome.
class Swarm
{
public:
    Swarm(const PredictedParams& params, const SwarmConfig& config);

    // Re-scores the stored bests at barrier weight `mu`, then scores every
    // particle and updates the bests.
    void evaluate(double mu);

    // Deletes and re-samples particles whose decoded assignment is infeasible,
    // then applies the velocity/position update and decodes.
    void step();

    std::vector<Particle>& particles() noexcept { return particles_; }
    const std::vector<Particle>& particles() const noexcept { return particles_; }

    bool has_global_best() const noexcept { return !global_best_bits_.empty(); }
    double global_best_value() const noexcept { return global_best_value_; }
    const Bits& global_best_bits() const noexcept { return global_best_bits_; }
    const std::vector<double>& global_best_position() const noexcept { return global_best_position_; }
    void set_global_best(std::vector<double> position, Bits bits, double value);

    // Lowest max_i U_i seen so far; the fallback when nothing was feasible.
    const Bits& least_unreliable_bits() const noexcept { return fallback_bits_; }
    double least_unreliable_value() const noexcept { return fallback_max_u_; }

    // Feasible assignment with the lowest objective at `mu` among everything
    // evaluated so far; empty bits when nothing feasible was seen.
    std::pair<Bits, double> best_encountered(double mu) const;
    std::size_t iteration() const noexcept { return iteration_; }
    std::size_t resampled_last_step() const noexcept { return resampled_; }

private:
    void randomize(Particle& p, Rng& rng) const;
    void decode(Particle& p) const;

    const PredictedParams& params_;
    SwarmConfig config_;
    std::vector<Particle> particles_;
    struct Seen
    {
        double p1 = 0.0;
        double log_slack = 0.0;
    };
    double rescore(const Bits& bits, double mu, double fallback) const;

    std::map<Bits, Seen> seen_;
    std::vector<double> global_best_position_;
    Bits global_best_bits_;
    double global_best_value_ = std::numeric_limits<double>::infinity();
    Bits fallback_bits_;
    double fallback_max_u_ = std::numeric_limits<double>::infinity();
    double fallback_value_ = std::numeric_limits<double>::infinity();
    std::size_t iteration_ = 0;
    std::size_t resampled_ = 0;
};

struct PsoResult
{
    Assignment assignment;
    bool feasible = false;
    double objective = std::numeric_limits<double>::infinity(); // recorded barrier objective
    double p1 = 0.0;
    std::vector<VehicleId> candidates;
    std::vector<double> best_history; // global best after each iteration's evaluation
};

// Runs the swarm on prepared tables.
PsoResult pso_solve(const PredictedParams& params, const SwarmConfig& config);

// Full ego-side pipeline: candidate reduction, prediction, swarm search.
// Throws std::invalid_argument when `incoming` is empty.
PsoResult pso_assign(std::span<const TaskSpec> incoming, std::span<const InProgressReplica> in_progress,
                     std::span<const VehicleState> vehicles, const RatePredictor& predictor,
                     const SwarmConfig& config);

} // namespace cave::assigner
