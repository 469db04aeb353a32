#pragma once

#include "cave/assigner.hpp"
#include "cave/predictor.hpp"
#include "cave/rng.hpp"
#include "cave/types.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cave::sim
{

enum class SchedulerKind : std::uint8_t
{
    Cave,
    Baseline,
    FpsoMr,
};

std::string_view to_string(SchedulerKind kind) noexcept;
// Accepts "cave", "baseline", "fpso_mr". Throws std::invalid_argument otherwise.
SchedulerKind parse_scheduler(std::string_view name);

struct Range
{
    double lo = 0.0;
    double hi = 0.0;
};

// Channel and mobility constants of the analytic link model.
inline constexpr double kCarrierGhz = 3.5;
inline constexpr double kThermalNoiseDbmPerHz = -174.0;
inline constexpr double kNoiseFigureDb = 7.0;
inline constexpr double kCoverageRadius = 300.0; // meters; beyond it in-flight replicas fail
inline constexpr Range kSpeedRange{8.0, 15.0};   // m/s relative to the ego vehicle

struct ScenarioConfig
{
    double slot_dt = 1e-3;          // s
    double duration = 60.0;         // s
    std::size_t n_vehicles = 20;
    double spawn_radius = 100.0;    // m
    double bandwidth = 10e6;        // Hz, per direction
    double tx_power = 20.0;         // dBm
    double arrival_intensity = 20.0; // tasks/s
    Range size_range{1e4, 1e5};      // bits, downlink and uplink payloads
    Range compute_range{1000.0, 2000.0}; // GFLOP
    double capacity = 1e4;           // GFLOPS (10 TFLOPS)
    double fail_threshold = 0.2;
    double reliability_rate = 1.0;   // 1/s
    SchedulerKind scheduler = SchedulerKind::Cave;
    std::uint64_t seed = 1;

    assigner::SwarmConfig swarm;     // seed is re-derived per scheduling call
    PredictorConfig predictor;

    // Throws std::invalid_argument describing the first violated constraint.
    void validate() const;
};

// Shannon rate of one flow when `concurrent_flows` share the link equally.
// Path loss 32.4 + 21 log10(d) + 20 log10(f_GHz) dB with d clamped to >= 1 m;
// noise -174 dBm/Hz + 7 dB noise figure over the bandwidth.
double link_rate(Vec2 ego_pos, Vec2 vehicle_pos, double bandwidth, double tx_power_dbm,
                 std::size_t concurrent_flows);

struct TaskSizeRanges
{
    Range size;    // bits
    Range compute; // GFLOP
};

// Poisson(intensity * slot_dt) tasks stamped with `now`; ids continue from
// `next_id`, which is advanced.
std::vector<TaskSpec> spawn_tasks(Rng& rng, double intensity, double slot_dt, const TaskSizeRanges& ranges,
                                  double now, double fail_threshold, std::uint64_t& next_id);

enum class Phase : std::uint8_t
{
    Down,
    Compute,
    Up,
    Done,
    Failed,
};

std::string_view to_string(Phase phase) noexcept;

inline constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

struct ReplicaRecord
{
    VehicleId vehicle{};
    double reliability_rate = 1.0;
    bool local = false;
    Phase phase = Phase::Down;

    double remaining_down = 0.0;    // bits
    double remaining_compute = 0.0; // GFLOP
    double remaining_up = 0.0;      // bits
    double deducted_down = 0.0;
    double deducted_compute = 0.0;
    double deducted_up = 0.0;

    double dispatch_time = 0.0;
    // Phase completion instants; NaN until reached.
    double down_end = kUnset;
    double compute_end = kUnset;
    double up_end = kUnset;
    double failed_at = kUnset;

    double allocation = 0.0; // GFLOPS granted in the last slot
    bool succeeded = false;

    bool terminal() const noexcept { return phase == Phase::Done || phase == Phase::Failed; }
    bool active() const noexcept { return !terminal(); }
    double latency() const noexcept { return up_end - dispatch_time; }
    double down_duration() const noexcept { return down_end - dispatch_time; }
    double compute_duration() const noexcept { return compute_end - down_end; }
    double up_duration() const noexcept { return up_end - compute_end; }
};

enum class Outcome : std::uint8_t
{
    Pending,
    Success,
    Failure,
    Censored,
};

std::string_view to_string(Outcome outcome) noexcept;

struct TaskRecord
{
    TaskSpec spec;
    std::vector<ReplicaRecord> replicas;
    Outcome outcome = Outcome::Pending;
    double latency = 0.0; // fastest succeeding replica; meaningful on Success
    double realized_unreliability = 1.0;
    double predicted_unreliability = 1.0;
    bool assignment_feasible = false; // as flagged by the scheduler

    bool all_terminal() const noexcept;
};

// Draws each replica's success with probability P_j at its realized latency
// (departed replicas fail outright), records the product-form unreliability, and
// sets outcome and latency. Requires every replica to be terminal.
void realize_outcome(TaskRecord& task, Rng& rng);

struct TaskRow
{
    TaskId id{};
    double arrival_s = 0.0;
    std::optional<double> latency_s;
    std::optional<double> unreliability;
    std::size_t redundancy = 0;
    Outcome outcome = Outcome::Pending;
};

struct MetricsReport
{
    std::string scheduler;
    std::uint64_t seed = 0;
    std::vector<TaskRow> rows;

    std::size_t dispatched = 0;
    std::size_t succeeded = 0;
    std::size_t failed = 0;
    std::size_t censored = 0;
    double mean_latency_s = 0.0;
    double p50_latency_s = 0.0;
    double p80_latency_s = 0.0;
    double p95_latency_s = 0.0;
    double frac_under_threshold = 0.0;          // realized U <= H among terminal tasks
    double mean_redundancy = 0.0;
    double mean_realized_unreliability = 0.0;
    double mean_predicted_unreliability = 0.0;
    double frac_predicted_under_threshold = 0.0;
    double frac_assignment_infeasible = 0.0;
};

MetricsReport summarize(std::span<const TaskRecord> tasks, SchedulerKind scheduler, std::uint64_t seed);

// Linear interpolation between closest ranks; 0 for an empty sample.
double percentile(std::vector<double> values, double q);

struct SimVehicle
{
    VehicleState state;
    // Active replicas hosted here, as (task index, replica index).
    std::vector<std::pair<std::size_t, std::size_t>> replicas;
};

/// Invariant measurements gathered while the simulation runs.
struct SimulationAudit
{
    double max_allocation_ratio = 0.0;  // max over slots and vehicles of sum(g) / capacity
    double max_step_ratio = 0.0;        // max of |delta d| / (|v| dt)
    std::size_t slots = 0;
    std::size_t departures = 0;
    double bits_transmitted = 0.0;
    double gflop_computed = 0.0;
};

// Least in-progress tasks, ties to the lowest id. Throws on an empty set.
Assignment assign_baseline(const TaskSpec& task, std::span<const VehicleState> vehicles);

// Same swarm as CAVE with in-progress tasks left out of the optimization.
assigner::PsoResult assign_fpso_mr(std::span<const TaskSpec> incoming, std::span<const VehicleState> vehicles,
                                   const RatePredictor& predictor, assigner::SwarmConfig config);

class Simulation
{
public:
    explicit Simulation(ScenarioConfig config);
    // Fixed initial fleet instead of a random one.
    Simulation(ScenarioConfig config, std::vector<VehicleState> vehicles);

    // One slot: arrivals and scheduling, allocation, work deduction, mobility,
    // outcome realization.
    void step();
    void run_to_end();
    bool finished() const noexcept { return slot_ >= total_slots_; }

    // Places an externally built task on the given vehicles at the current slot.
    void dispatch(const TaskSpec& task, const Assignment& assignment, double predicted_unreliability = 1.0,
                  bool feasible = true);

    // Allocation, Down -> Compute -> Up progress with residual carry for the
    // current slot.
    void advance_slot();

    MetricsReport report() const;

    double now() const noexcept { return static_cast<double>(slot_) * config_.slot_dt; }
    std::size_t slot() const noexcept { return slot_; }
    const ScenarioConfig& config() const noexcept { return config_; }
    const std::vector<TaskRecord>& tasks() const noexcept { return tasks_; }
    const std::vector<SimVehicle>& vehicles() const noexcept { return vehicles_; }
    std::vector<VehicleState> vehicle_states() const;
    const SimulationAudit& audit() const noexcept { return audit_; }
    const RatePredictor& predictor() const noexcept { return predictor_; }

    // Hook for tests: pins a vehicle in place.
    void set_velocity(VehicleId vehicle, Vec2 velocity);

private:
    SimVehicle spawn_vehicle();
    SimVehicle* find_vehicle(VehicleId id);
    void schedule(std::vector<TaskSpec> incoming);
    std::vector<assigner::InProgressReplica> in_progress_replicas() const;
    void refresh_flow_counts();
    void move_vehicles();
    void depart(std::size_t index);
    void release(SimVehicle& vehicle, std::size_t task, std::size_t replica);
    void realize_finished();

    ScenarioConfig config_;
    std::size_t total_slots_ = 0;
    std::size_t slot_ = 0;
    std::uint64_t next_task_id_ = 0;
    std::uint64_t next_vehicle_id_ = 0;
    std::uint64_t scheduler_calls_ = 0;
    Rng arrival_rng_;
    Rng mobility_rng_;
    std::vector<TaskRecord> tasks_;
    std::vector<std::size_t> pending_;
    std::vector<SimVehicle> vehicles_;
    RatePredictor predictor_;
    SimulationAudit audit_;
};

MetricsReport run(const ScenarioConfig& config);

} // namespace cave::sim
