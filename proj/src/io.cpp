#include "cave/io.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <ostream>
#include <set>

namespace cave::io
{

using nlohmann::json;

namespace
{

const std::set<std::string> kScenarioKeys = {
    "slot_dt",   "duration",       "n_vehicles",     "spawn_radius",     "bandwidth",
    "tx_power",  "arrival_intensity", "size_range",  "compute_range",    "capacity",
    "fail_threshold", "reliability_rate", "scheduler", "seed",           "swarm",
    "predictor",
};

const std::set<std::string> kSwarmKeys = {
    "particles", "iterations", "inertia", "cognitive", "social", "candidate_count",
    "mu0",       "mu_decay",   "v_max",   "barrier_sign",
};

const std::set<std::string> kPredictorKeys = {"ewma_weight", "window", "prior_down_rate", "prior_up_rate"};

void reject_unknown(const json& j, const std::set<std::string>& allowed, std::string_view where)
{
    if (!j.is_object())
        throw ConfigError(std::string(where) + ": expected a JSON object");
    for (const auto& item : j.items())
        if (!allowed.contains(item.key()))
            throw ConfigError(std::string(where) + ": unknown key '" + item.key() + "'");
}

template <typename T>
void read_field(const json& j, const char* key, T& target)
{
    auto it = j.find(key);
    if (it == j.end())
        return;
    try
    {
        if constexpr (std::is_unsigned_v<T>)
        {
            if (!it->is_number_integer() || it->get<long long>() < 0)
                throw ConfigError(std::string(key) + ": expected a nonnegative integer");
        }
        target = it->get<T>();
    }
    catch (const json::exception& e)
    {
        throw ConfigError(std::string(key) + ": " + e.what());
    }
}

void read_range(const json& j, const char* key, sim::Range& target)
{
    auto it = j.find(key);
    if (it == j.end())
        return;
    if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number())
        throw ConfigError(std::string(key) + ": expected [lo, hi]");
    target = {(*it)[0].get<double>(), (*it)[1].get<double>()};
}

} // namespace

sim::ScenarioConfig scenario_from_json(const json& j)
{
    reject_unknown(j, kScenarioKeys, "scenario");
    sim::ScenarioConfig c;
    read_field(j, "slot_dt", c.slot_dt);
    read_field(j, "duration", c.duration);
    read_field(j, "n_vehicles", c.n_vehicles);
    read_field(j, "spawn_radius", c.spawn_radius);
    read_field(j, "bandwidth", c.bandwidth);
    read_field(j, "tx_power", c.tx_power);
    read_field(j, "arrival_intensity", c.arrival_intensity);
    read_range(j, "size_range", c.size_range);
    read_range(j, "compute_range", c.compute_range);
    read_field(j, "capacity", c.capacity);
    read_field(j, "fail_threshold", c.fail_threshold);
    read_field(j, "reliability_rate", c.reliability_rate);
    read_field(j, "seed", c.seed);
    if (auto it = j.find("scheduler"); it != j.end())
    {
        if (!it->is_string())
            throw ConfigError("scheduler: expected a string");
        try
        {
            c.scheduler = sim::parse_scheduler(it->get<std::string>());
        }
        catch (const std::invalid_argument& e)
        {
            throw ConfigError(e.what());
        }
    }
    if (auto it = j.find("swarm"); it != j.end())
    {
        reject_unknown(*it, kSwarmKeys, "swarm");
        auto& s = c.swarm;
        read_field(*it, "particles", s.particles);
        read_field(*it, "iterations", s.iterations);
        read_field(*it, "inertia", s.inertia);
        read_field(*it, "cognitive", s.cognitive);
        read_field(*it, "social", s.social);
        read_field(*it, "candidate_count", s.candidate_count);
        read_field(*it, "mu0", s.mu0);
        read_field(*it, "mu_decay", s.mu_decay);
        read_field(*it, "v_max", s.v_max);
        if (auto b = it->find("barrier_sign"); b != it->end())
        {
            const std::string sign = b->is_string() ? b->get<std::string>() : "";
            if (sign == "interior")
                s.barrier_sign = assigner::BarrierSign::Interior;
            else if (sign == "literal")
                s.barrier_sign = assigner::BarrierSign::Literal;
            else
                throw ConfigError("swarm.barrier_sign: expected \"interior\" or \"literal\"");
        }
    }
    if (auto it = j.find("predictor"); it != j.end())
    {
        reject_unknown(*it, kPredictorKeys, "predictor");
        read_field(*it, "ewma_weight", c.predictor.ewma_weight);
        read_field(*it, "window", c.predictor.window);
        read_field(*it, "prior_down_rate", c.predictor.prior_down_rate);
        read_field(*it, "prior_up_rate", c.predictor.prior_up_rate);
    }

    try
    {
        c.validate();
    }
    catch (const std::invalid_argument& e)
    {
        throw ConfigError(e.what());
    }
    return c;
}

json scenario_to_json(const sim::ScenarioConfig& c)
{
    const auto& s = c.swarm;
    return json{
        {"slot_dt", c.slot_dt},
        {"duration", c.duration},
        {"n_vehicles", c.n_vehicles},
        {"spawn_radius", c.spawn_radius},
        {"bandwidth", c.bandwidth},
        {"tx_power", c.tx_power},
        {"arrival_intensity", c.arrival_intensity},
        {"size_range", {c.size_range.lo, c.size_range.hi}},
        {"compute_range", {c.compute_range.lo, c.compute_range.hi}},
        {"capacity", c.capacity},
        {"fail_threshold", c.fail_threshold},
        {"reliability_rate", c.reliability_rate},
        {"scheduler", std::string(sim::to_string(c.scheduler))},
        {"seed", c.seed},
        {"swarm",
         {{"particles", s.particles},
          {"iterations", s.iterations},
          {"inertia", s.inertia},
          {"cognitive", s.cognitive},
          {"social", s.social},
          {"candidate_count", s.candidate_count},
          {"mu0", s.mu0},
          {"mu_decay", s.mu_decay},
          {"v_max", s.v_max},
          {"barrier_sign", s.barrier_sign == assigner::BarrierSign::Interior ? "interior" : "literal"}}},
        {"predictor",
         {{"ewma_weight", c.predictor.ewma_weight},
          {"window", c.predictor.window},
          {"prior_down_rate", c.predictor.prior_down_rate},
          {"prior_up_rate", c.predictor.prior_up_rate}}},
    };
}

json read_json_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());
    try
    {
        return json::parse(in);
    }
    catch (const json::parse_error& e)
    {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

sim::ScenarioConfig load_scenario(const std::filesystem::path& path) { return scenario_from_json(read_json_file(path)); }

std::string format_double(double value)
{
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc{})
        return "nan";
    return std::string(buf.data(), end);
}

void write_tasks_csv(std::ostream& out, const sim::MetricsReport& report)
{
    out << kTaskCsvHeader << '\n';
    for (const auto& row : report.rows)
    {
        out << raw(row.id) << ',' << format_double(row.arrival_s) << ',';
        if (row.latency_s)
            out << format_double(*row.latency_s);
        out << ',';
        if (row.unreliability)
            out << format_double(*row.unreliability);
        out << ',' << row.redundancy << ',' << sim::to_string(row.outcome) << '\n';
    }
}

json summary_json(const sim::MetricsReport& r, const sim::ScenarioConfig& config)
{
    return json{
        {"scheduler", r.scheduler},
        {"seed", r.seed},
        {"tasks_dispatched", r.dispatched},
        {"tasks_succeeded", r.succeeded},
        {"tasks_failed", r.failed},
        {"tasks_censored", r.censored},
        {"mean_latency_s", r.mean_latency_s},
        {"p50_latency_s", r.p50_latency_s},
        {"p80_latency_s", r.p80_latency_s},
        {"p95_latency_s", r.p95_latency_s},
        {"frac_under_threshold", r.frac_under_threshold},
        {"mean_redundancy", r.mean_redundancy},
        {"mean_realized_unreliability", r.mean_realized_unreliability},
        {"mean_predicted_unreliability", r.mean_predicted_unreliability},
        {"frac_predicted_under_threshold", r.frac_predicted_under_threshold},
        {"frac_assignment_infeasible", r.frac_assignment_infeasible},
        {"config", scenario_to_json(config)},
    };
}

void write_run_outputs(const std::filesystem::path& out_dir, const sim::MetricsReport& report,
                       const sim::ScenarioConfig& config)
{
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec)
        throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

    std::ofstream csv(out_dir / "tasks.csv", std::ios::binary);
    if (!csv)
        throw IoError("cannot write " + (out_dir / "tasks.csv").string());
    write_tasks_csv(csv, report);

    std::ofstream summary(out_dir / "summary.json", std::ios::binary);
    if (!summary)
        throw IoError("cannot write " + (out_dir / "summary.json").string());
    summary << summary_json(report, config).dump(2) << '\n';
    if (!csv || !summary)
        throw IoError("write failed in " + out_dir.string());
}

} // namespace cave::io
