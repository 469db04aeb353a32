#pragma once

// Reference solvers that check the allocator and the swarm search without
// sharing their code paths: a derivative-free minimizer over the capacity
// simplex and exhaustive enumeration of small assignment problems.

#include "cave/allocator.hpp"
#include "cave/assigner.hpp"
#include "cave/predictor.hpp"
#include "cave/types.hpp"

#include <cstdint>
#include <vector>

namespace cave::oracle
{

struct SimplexMinimum
{
    std::vector<double> g;
    double objective = 0.0; // sum C_i / g_i
    std::size_t sweeps = 0;
};

// Pairwise golden-section coordinate descent on sum(C_i / g_i) over
// {g > 0, sum g = capacity}, started from the equal split.
SimplexMinimum minimize_latency_sum(const std::vector<double>& compute, double capacity);

// n in [1, 20], C in [1, 1e4] GFLOP, G in [1e2, 1e5] GFLOPS.
allocator::VehicleTaskLoad random_load(Rng& rng);

struct AllocationSuiteReport
{
    std::size_t loads = 0;
    double max_gap = 0.0;          // relative objective gap, closed form vs minimizer
    double max_stationarity = 0.0; // KKT residuals of the closed form
    double max_slackness = 0.0;
    bool passed = false;
};

inline constexpr double kAllocationTolerance = 1e-6;

AllocationSuiteReport run_allocation_suite(std::size_t loads = 200, std::uint64_t seed = 1);

/// A vehicle described directly by the quantities the cost model consumes, with
/// no predictor in between.
struct OracleVehicle
{
    VehicleId id{};
    double capacity = 0.0;
    double reliability_rate = 1.0;
    double down_aggregate = 0.0; // b/s shared by every flow on the link
    double up_aggregate = 0.0;
    std::vector<assigner::InProgressReplica> running;
};

struct AssignmentInstance
{
    std::vector<TaskSpec> tasks;
    std::vector<OracleVehicle> vehicles;

    // The same instance in the scheduler's vocabulary.
    std::vector<VehicleState> vehicle_states() const;
    std::vector<assigner::InProgressReplica> in_progress() const;
    RatePredictor predictor() const;
};

struct OracleEvaluation
{
    double p1 = 0.0;
    std::vector<double> unreliability;
    bool feasible = false;
};

// bits[i * |vehicles| + j] places task i on vehicles[j]. Each vehicle's links and
// compute are shared equally among its running replicas and the newcomers.
OracleEvaluation evaluate_assignment(const AssignmentInstance& instance, const std::vector<std::uint8_t>& bits);
OracleEvaluation evaluate_assignment(const AssignmentInstance& instance, const Assignment& assignment);

struct EnumerationResult
{
    bool any_feasible = false;
    double best_p1 = 0.0;
    std::vector<std::uint8_t> best_bits;
    std::size_t feasible_count = 0;
};

// Scans all 2^(|tasks| * |vehicles|) assignments. Throws std::invalid_argument
// beyond 20 bits.
EnumerationResult enumerate(const AssignmentInstance& instance);

// Two tasks, three vehicles with up to two running replicas each; redrawn until
// at least one assignment is feasible.
AssignmentInstance random_assignment_instance(std::uint64_t seed);

struct AssignmentSuiteReport
{
    std::size_t instances = 0;
    std::size_t within_tolerance = 0;   // feasible and p1 <= (1 + 5%) * optimum
    std::size_t flagged_feasible = 0;
    std::size_t flag_violations = 0;    // flagged feasible but some U_i > H_i
    double max_gap = 0.0;               // relative, over feasible results
    double mean_gap = 0.0;
    bool passed = false;
};

inline constexpr double kAssignmentGap = 0.05;
inline constexpr std::size_t kAssignmentRequired = 90;

AssignmentSuiteReport run_assignment_suite(std::size_t instances = 100, std::uint64_t seed = 1,
                                           const assigner::SwarmConfig& swarm = {});

} // namespace cave::oracle
