#include "cave/cli.hpp"

#include "cave/io.hpp"
#include "cave/oracle.hpp"
#include "cave/sweep.hpp"

#include <fstream>
#include <ostream>

#include <CLI11.hpp>

namespace cave::cli
{

namespace
{

sim::ScenarioConfig apply(sim::ScenarioConfig config, const RunOverrides& o)
{
    if (o.seed)
        config.seed = *o.seed;
    if (o.scheduler)
    {
        try
        {
            config.scheduler = sim::parse_scheduler(*o.scheduler);
        }
        catch (const std::invalid_argument& e)
        {
            throw io::ConfigError(e.what());
        }
    }
    if (o.duration)
        config.duration = *o.duration;
    try
    {
        config.validate();
    }
    catch (const std::invalid_argument& e)
    {
        throw io::ConfigError(e.what());
    }
    return config;
}

template <typename F>
int guarded(std::ostream& err, F body)
{
    try
    {
        return body();
    }
    catch (const io::ConfigError& e)
    {
        err << "invalid input: " << e.what() << '\n';
        return kExitInvalid;
    }
    catch (const io::IoError& e)
    {
        err << "i/o error: " << e.what() << '\n';
        return kExitIo;
    }
    catch (const std::filesystem::filesystem_error& e)
    {
        err << "i/o error: " << e.what() << '\n';
        return kExitIo;
    }
}

} // namespace

int cmd_run(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
            const RunOverrides& overrides, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        sim::ScenarioConfig base = config_path.empty() ? sim::ScenarioConfig{} : io::load_scenario(config_path);
        const auto config = apply(base, overrides);
        const auto report = sim::run(config);
        io::write_run_outputs(out_dir, report, config);
        out << "scheduler=" << report.scheduler << " seed=" << report.seed << " tasks=" << report.dispatched
            << " mean_latency_s=" << io::format_double(report.mean_latency_s)
            << " frac_under_threshold=" << io::format_double(report.frac_under_threshold)
            << " mean_redundancy=" << io::format_double(report.mean_redundancy) << '\n';
        return kExitOk;
    });
}

int cmd_sweep(const std::filesystem::path& sweep_path, const std::filesystem::path& out_dir, unsigned workers,
              std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        const auto spec = sweep::sweep_from_json(io::read_json_file(sweep_path));
        const auto rows = sweep::run_sweep(spec, workers);

        std::error_code ec;
        std::filesystem::create_directories(out_dir, ec);
        if (ec)
            throw io::IoError("cannot create " + out_dir.string() + ": " + ec.message());
        const auto path = out_dir / "sweep.csv";
        std::ofstream csv(path, std::ios::binary);
        if (!csv)
            throw io::IoError("cannot write " + path.string());
        sweep::write_sweep_csv(csv, rows);
        if (!csv)
            throw io::IoError("write failed: " + path.string());
        out << rows.size() << " rows -> " << path.string() << '\n';
        return kExitOk;
    });
}

int cmd_oracle(const std::string& suite, std::ostream& out, std::ostream& err)
{
    using io::format_double;
    if (suite == "allocation")
    {
        const auto r = oracle::run_allocation_suite();
        out << "allocation loads=" << r.loads << " max_gap=" << format_double(r.max_gap)
            << " max_stationarity=" << format_double(r.max_stationarity)
            << " max_slackness=" << format_double(r.max_slackness) << " tolerance="
            << format_double(oracle::kAllocationTolerance) << (r.passed ? " ok" : " EXCEEDED") << '\n';
        return r.passed ? kExitOk : kExitTolerance;
    }
    if (suite == "assignment")
    {
        const auto r = oracle::run_assignment_suite();
        out << "assignment instances=" << r.instances << " within_5pct=" << r.within_tolerance
            << " max_gap=" << format_double(r.max_gap) << " mean_gap=" << format_double(r.mean_gap)
            << " flagged_feasible=" << r.flagged_feasible << " flag_violations=" << r.flag_violations
            << (r.passed ? " ok" : " EXCEEDED") << '\n';
        return r.passed ? kExitOk : kExitTolerance;
    }
    err << "unknown oracle suite '" << suite << "' (expected allocation or assignment)\n";
    return kExitInvalid;
}

int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Redundant task offloading simulator", "cave"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    RunOverrides overrides;
    std::uint64_t seed = 0;
    std::string scheduler;
    double duration = 0.0;
    auto* run = app.add_subcommand("run", "Simulate one scenario and write tasks.csv and summary.json");
    run->add_option("--config", config_path, "Scenario JSON");
    run->add_option("--out", out_dir, "Output directory");
    auto* seed_opt = run->add_option("--seed", seed, "Root seed");
    auto* sched_opt = run->add_option("--scheduler", scheduler, "cave | baseline | fpso_mr");
    auto* dur_opt = run->add_option("--duration", duration, "Simulated seconds");

    std::string sweep_path;
    std::string sweep_out = "out";
    unsigned workers = 0;
    auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep and write sweep.csv");
    sweep->add_option("--spec", sweep_path, "Sweep JSON")->required();
    sweep->add_option("--out", sweep_out, "Output directory");
    sweep->add_option("--workers", workers, "Parallel runs (0 = hardware concurrency)");

    std::string suite;
    auto* orc = app.add_subcommand("oracle", "Check solvers against reference oracles");
    orc->add_option("suite", suite, "allocation | assignment")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty())
        reversed.pop_back();
    try
    {
        app.parse(reversed);
    }
    catch (const CLI::CallForHelp&)
    {
        out << app.help();
        return kExitOk;
    }
    catch (const CLI::ParseError& e)
    {
        err << e.what() << '\n';
        return kExitInvalid;
    }

    if (*run)
    {
        if (*seed_opt)
            overrides.seed = seed;
        if (*sched_opt)
            overrides.scheduler = scheduler;
        if (*dur_opt)
            overrides.duration = duration;
        return cmd_run(config_path, out_dir, overrides, out, err);
    }
    if (*sweep)
        return cmd_sweep(sweep_path, sweep_out, workers, out, err);
    return cmd_oracle(suite, out, err);
}

} // namespace cave::cli
