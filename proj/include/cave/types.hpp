#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cave
{

enum class TaskId : std::uint64_t
{
};
enum class VehicleId : std::uint64_t
{
};

constexpr std::uint64_t raw(TaskId id) noexcept { return static_cast<std::uint64_t>(id); }
constexpr std::uint64_t raw(VehicleId id) noexcept { return static_cast<std::uint64_t>(id); }

enum class Direction : std::uint8_t
{
    Down, // ego -> vehicle
    Up,   // vehicle -> ego
};

struct Vec2
{
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) noexcept { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) noexcept { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 a) noexcept { return {s * a.x, s * a.y}; }
    friend bool operator==(Vec2, Vec2) = default;
};

double norm(Vec2 v) noexcept;

/// Raised when a stored decision variable does not match the data it refers to.
class InconsistencyError : public std::logic_error
{
public:
    using std::logic_error::logic_error;
};

// One passenger task. Units: seconds, GFLOP, bits.
struct TaskSpec
{
    TaskId id{};
    double arrival_time = 0.0;
    double compute = 0.0;  // C_i
    double down_bits = 0.0; // D_i
    double up_bits = 0.0;   // E_i
    double fail_threshold = 1.0; // H_i^min

    // Throws std::invalid_argument on a violated invariant.
    void validate() const;
};

struct VehicleState
{
    VehicleId id{};
    Vec2 position;
    Vec2 velocity;
    double capacity = 0.0;         // GFLOPS
    double reliability_rate = 1.0; // 1/s, P(x) = exp(-rate * x)
    std::vector<TaskId> in_progress;
    // Local computation: links are ideal and the replica never fails.
    bool local = false;

    void validate() const;
};

/// The ego vehicle's own compute as a vehicle record: transmission terms vanish
/// and reliability is 1 regardless of latency.
VehicleState make_local_vehicle(VehicleId id, double capacity);

struct LinkRates
{
    double down_rate = 0.0; // bits/s
    double up_rate = 0.0;   // bits/s
};

/// Sparse binary task-to-vehicle matrix.
class Assignment
{
public:
    using Pair = std::pair<TaskId, VehicleId>;

    void assign(TaskId task, VehicleId vehicle) { entries_.emplace(task, vehicle); }
    bool contains(TaskId task, VehicleId vehicle) const { return entries_.contains({task, vehicle}); }
    std::vector<VehicleId> vehicles_of(TaskId task) const;
    std::size_t redundancy(TaskId task) const { return vehicles_of(task).size(); }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }

    const std::set<Pair>& entries() const noexcept { return entries_; }
    auto begin() const noexcept { return entries_.begin(); }
    auto end() const noexcept { return entries_.end(); }

    friend bool operator==(const Assignment&, const Assignment&) = default;

private:
    std::set<Pair> entries_;
};

/// GFLOPS per assigned (task, vehicle) pair.
class Allocation
{
public:
    using Pair = std::pair<TaskId, VehicleId>;

    void set(TaskId task, VehicleId vehicle, double gflops);
    double at(TaskId task, VehicleId vehicle) const; // zero when absent
    double vehicle_total(VehicleId vehicle) const;
    const std::map<Pair, double>& entries() const noexcept { return entries_; }

    // Checks positivity exactly on the assigned pairs and that no vehicle exceeds
    // its capacity beyond 1e-9 relative. Throws InconsistencyError.
    void check(const Assignment& assignment, const std::vector<VehicleState>& vehicles) const;

private:
    std::map<Pair, double> entries_;
};

} // namespace cave
