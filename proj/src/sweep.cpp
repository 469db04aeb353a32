#include "cave/sweep.hpp"

#include "cave/io.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

namespace cave::sweep
{

using nlohmann::json;

std::string_view to_string(SweepParameter p) noexcept
{
    return p == SweepParameter::ArrivalIntensity ? "arrival_intensity" : "fail_threshold";
}

void SweepSpec::validate() const
{
    if (values.empty())
        throw std::invalid_argument("sweep: values must be nonempty");
    if (repetitions == 0)
        throw std::invalid_argument("sweep: repetitions must be >= 1");
    if (schedulers.empty())
        throw std::invalid_argument("sweep: schedulers must be nonempty");
    for (auto s : schedulers)
        for (double v : values)
            point_config(*this, s, v, 0).validate();
}

SweepSpec sweep_from_json(const json& j)
{
    if (!j.is_object())
        throw io::ConfigError("sweep: expected a JSON object");
    for (const auto& item : j.items())
    {
        const auto& k = item.key();
        if (k != "parameter" && k != "values" && k != "repetitions" && k != "base" && k != "schedulers")
            throw io::ConfigError("sweep: unknown key '" + k + "'");
    }

    SweepSpec spec;
    const auto param = j.value("parameter", std::string{});
    if (param == "arrival_intensity")
        spec.parameter = SweepParameter::ArrivalIntensity;
    else if (param == "fail_threshold")
        spec.parameter = SweepParameter::FailThreshold;
    else
        throw io::ConfigError("sweep: parameter must be arrival_intensity or fail_threshold");

    auto values = j.find("values");
    if (values == j.end() || !values->is_array())
        throw io::ConfigError("sweep: values must be an array");
    for (const auto& v : *values)
    {
        if (!v.is_number())
            throw io::ConfigError("sweep: values must be numbers");
        spec.values.push_back(v.get<double>());
    }

    if (auto reps = j.find("repetitions"); reps != j.end())
    {
        if (!reps->is_number_integer() || reps->get<long long>() < 1)
            throw io::ConfigError("sweep: repetitions must be an integer >= 1");
        spec.repetitions = reps->get<std::size_t>();
    }

    spec.base = io::scenario_from_json(j.value("base", json::object()));

    if (auto s = j.find("schedulers"); s != j.end())
    {
        if (!s->is_array())
            throw io::ConfigError("sweep: schedulers must be an array");
        for (const auto& name : *s)
        {
            if (!name.is_string())
                throw io::ConfigError("sweep: scheduler names must be strings");
            try
            {
                spec.schedulers.push_back(sim::parse_scheduler(name.get<std::string>()));
            }
            catch (const std::invalid_argument& e)
            {
                throw io::ConfigError(e.what());
            }
        }
    }
    else
    {
        spec.schedulers.push_back(spec.base.scheduler);
    }

    try
    {
        spec.validate();
    }
    catch (const std::invalid_argument& e)
    {
        throw io::ConfigError(e.what());
    }
    return spec;
}

sim::ScenarioConfig point_config(const SweepSpec& spec, sim::SchedulerKind scheduler, double value, std::size_t rep)
{
    sim::ScenarioConfig c = spec.base;
    c.scheduler = scheduler;
    c.seed = spec.base.seed + rep;
    if (spec.parameter == SweepParameter::ArrivalIntensity)
        c.arrival_intensity = value;
    else
        c.fail_threshold = value;
    return c;
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec, unsigned workers)
{
    spec.validate();
    std::vector<SweepRow> rows;
    for (auto s : spec.schedulers)
        for (double v : spec.values)
            for (std::size_t r = 0; r < spec.repetitions; ++r)
                rows.push_back({s, spec.parameter, v, r, {}});

    if (workers == 0)
        workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(rows.size()));

    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        for (std::size_t i = next++; i < rows.size(); i = next++)
        {
            try
            {
                auto& row = rows[i];
                row.report = sim::run(point_config(spec, row.scheduler, row.value, row.rep));
            }
            catch (...)
            {
                std::lock_guard lock(error_mutex);
                if (!error)
                    error = std::current_exception();
            }
        }
    };

    if (workers <= 1)
    {
        work();
    }
    else
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back(work);
    }
    if (error)
        std::rethrow_exception(error);
    return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows)
{
    using io::format_double;
    out << kSweepCsvHeader << '\n';
    for (const auto& row : rows)
    {
        const auto& r = row.report;
        out << sim::to_string(row.scheduler) << ',' << to_string(row.parameter) << ',' << format_double(row.value)
            << ',' << row.rep << ',' << format_double(r.mean_latency_s) << ',' << format_double(r.p80_latency_s) << ','
            << format_double(r.frac_under_threshold) << ',' << format_double(r.mean_redundancy) << '\n';
    }
}

} // namespace cave::sweep
