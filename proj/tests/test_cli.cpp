#include "cave/cli.hpp"
#include "cave/io.hpp"
#include "cave/sweep.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

using namespace cave;
using nlohmann::json;
namespace fs = std::filesystem;

namespace
{

class TempDir
{
public:
    TempDir()
    {
        static int counter = 0;
        path_ = fs::temp_directory_path() /
                ("cave_cli_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
                 std::to_string(counter++) + "_" +
                 ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

void write_file(const fs::path& p, const std::string& text)
{
    std::ofstream out(p, std::ios::binary);
    out << text;
}

std::string read_file(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const char* kShortScenario = R"({"duration": 1.0, "seed": 3})";

} // namespace

TEST(ScenarioJson, EmptyObjectKeepsDefaults)
{
    const auto c = io::scenario_from_json(json::object());
    EXPECT_EQ(c.n_vehicles, 20u);
    EXPECT_EQ(c.arrival_intensity, 20.0);
    EXPECT_EQ(c.scheduler, sim::SchedulerKind::Cave);
    EXPECT_EQ(c.size_range.lo, 1e4);
    EXPECT_EQ(c.compute_range.hi, 2000.0);
}

TEST(ScenarioJson, FieldsOverride)
{
    const auto c = io::scenario_from_json(json::parse(R"({
        "slot_dt": 0.002, "duration": 5, "n_vehicles": 7, "spawn_radius": 50, "bandwidth": 2e7,
        "tx_power": 23, "arrival_intensity": 12.5, "size_range": [100, 200], "compute_range": [10, 20],
        "capacity": 500, "fail_threshold": 0.3, "reliability_rate": 2, "scheduler": "fpso_mr", "seed": 44,
        "swarm": {"particles": 8, "iterations": 20, "barrier_sign": "literal"},
        "predictor": {"ewma_weight": 0.5, "window": 4}})"));
    EXPECT_EQ(c.slot_dt, 0.002);
    EXPECT_EQ(c.duration, 5.0);
    EXPECT_EQ(c.n_vehicles, 7u);
    EXPECT_EQ(c.spawn_radius, 50.0);
    EXPECT_EQ(c.bandwidth, 2e7);
    EXPECT_EQ(c.tx_power, 23.0);
    EXPECT_EQ(c.arrival_intensity, 12.5);
    EXPECT_EQ(c.size_range.hi, 200.0);
    EXPECT_EQ(c.compute_range.lo, 10.0);
    EXPECT_EQ(c.capacity, 500.0);
    EXPECT_EQ(c.fail_threshold, 0.3);
    EXPECT_EQ(c.reliability_rate, 2.0);
    EXPECT_EQ(c.scheduler, sim::SchedulerKind::FpsoMr);
    EXPECT_EQ(c.seed, 44u);
    EXPECT_EQ(c.swarm.particles, 8u);
    EXPECT_EQ(c.swarm.iterations, 20u);
    EXPECT_EQ(c.swarm.barrier_sign, assigner::BarrierSign::Literal);
    EXPECT_EQ(c.predictor.ewma_weight, 0.5);
    EXPECT_EQ(c.predictor.window, 4u);
}

TEST(ScenarioJson, RoundTrip)
{
    auto c = io::scenario_from_json(json::parse(R"({"seed": 12, "scheduler": "baseline", "size_range": [5, 9]})"));
    const auto again = io::scenario_from_json(io::scenario_to_json(c));
    EXPECT_EQ(io::scenario_to_json(again), io::scenario_to_json(c));
}

TEST(ScenarioJson, RejectsBadInput)
{
    for (const char* text : {R"({"durration": 1})", R"({"size_range": [1]})", R"({"size_range": "wide"})",
                             R"({"scheduler": "greedy"})", R"({"n_vehicles": -3})", R"({"n_vehicles": 2.5})",
                             R"({"fail_threshold": 0})", R"({"spawn_radius": 400})", R"({"swarm": {"speed": 1}})",
                             R"({"capacity": "fast"})", R"([1, 2])"})
        EXPECT_THROW(io::scenario_from_json(json::parse(text)), io::ConfigError) << text;
}

TEST(FormatDouble, ShortestDotDecimal)
{
    EXPECT_EQ(io::format_double(0.5), "0.5");
    EXPECT_EQ(io::format_double(0.1), "0.1");
    EXPECT_EQ(io::format_double(2.0), "2");
    EXPECT_EQ(std::stod(io::format_double(0.1 + 0.2)), 0.1 + 0.2);
}

TEST(TasksCsv, HeaderAndEmptyFields)
{
    sim::MetricsReport r;
    sim::TaskRow done;
    done.id = TaskId{0};
    done.arrival_s = 0.25;
    done.latency_s = 0.125;
    done.unreliability = 0.5;
    done.redundancy = 2;
    done.outcome = sim::Outcome::Success;
    sim::TaskRow open;
    open.id = TaskId{1};
    open.arrival_s = 1.5;
    open.redundancy = 1;
    open.outcome = sim::Outcome::Censored;
    r.rows = {done, open};
    std::ostringstream out;
    io::write_tasks_csv(out, r);
    EXPECT_EQ(out.str(), "task_id,arrival_s,latency_s,unreliability,redundancy,outcome\n"
                         "0,0.25,0.125,0.5,2,success\n"
                         "1,1.5,,,1,censored\n");
}

TEST(CmdRun, WritesOutputs)
{
    TempDir dir;
    write_file(dir.path() / "s.json", kShortScenario);
    std::ostringstream out, err;
    ASSERT_EQ(cli::cmd_run(dir.path() / "s.json", dir.path() / "o", {}, out, err), cli::kExitOk) << err.str();
    EXPECT_TRUE(fs::exists(dir.path() / "o" / "tasks.csv"));
    EXPECT_TRUE(fs::exists(dir.path() / "o" / "summary.json"));
    const auto csv = read_file(dir.path() / "o" / "tasks.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), io::kTaskCsvHeader);
    const auto summary = json::parse(read_file(dir.path() / "o" / "summary.json"));
    EXPECT_EQ(summary["seed"], 3);
    EXPECT_EQ(summary["config"]["duration"], 1.0);
}

TEST(CmdRun, SameSeedSameBytes)
{
    TempDir dir;
    write_file(dir.path() / "s.json", kShortScenario);
    cli::RunOverrides o;
    o.seed = 7;
    std::ostringstream out, err;
    ASSERT_EQ(cli::cmd_run(dir.path() / "s.json", dir.path() / "a", o, out, err), cli::kExitOk);
    ASSERT_EQ(cli::cmd_run(dir.path() / "s.json", dir.path() / "b", o, out, err), cli::kExitOk);
    const auto a = read_file(dir.path() / "a" / "tasks.csv");
    EXPECT_GT(a.size(), io::kTaskCsvHeader.size() + 1);
    EXPECT_EQ(a, read_file(dir.path() / "b" / "tasks.csv"));
    EXPECT_EQ(read_file(dir.path() / "a" / "summary.json"), read_file(dir.path() / "b" / "summary.json"));
}

TEST(CmdRun, OverridesApply)
{
    TempDir dir;
    write_file(dir.path() / "s.json", kShortScenario);
    cli::RunOverrides o;
    o.scheduler = "baseline";
    o.duration = 2.0;
    o.seed = 5;
    std::ostringstream out, err;
    ASSERT_EQ(cli::cmd_run(dir.path() / "s.json", dir.path() / "o", o, out, err), cli::kExitOk);
    const auto summary = json::parse(read_file(dir.path() / "o" / "summary.json"));
    EXPECT_EQ(summary["scheduler"], "baseline");
    EXPECT_EQ(summary["seed"], 5);
    EXPECT_EQ(summary["config"]["duration"], 2.0);
    EXPECT_EQ(summary["mean_redundancy"].get<double>(), 1.0);
}

TEST(CmdRun, ErrorCodes)
{
    TempDir dir;
    std::ostringstream out, err;
    write_file(dir.path() / "bad.json", R"({"arrival_intensity": -1})");
    EXPECT_EQ(cli::cmd_run(dir.path() / "bad.json", dir.path() / "o", {}, out, err), cli::kExitInvalid);
    write_file(dir.path() / "broken.json", "{not json");
    EXPECT_EQ(cli::cmd_run(dir.path() / "broken.json", dir.path() / "o", {}, out, err), cli::kExitInvalid);
    cli::RunOverrides o;
    o.scheduler = "nope";
    write_file(dir.path() / "s.json", kShortScenario);
    EXPECT_EQ(cli::cmd_run(dir.path() / "s.json", dir.path() / "o", o, out, err), cli::kExitInvalid);
    EXPECT_EQ(cli::cmd_run(dir.path() / "missing.json", dir.path() / "o", {}, out, err), cli::kExitIo);
    write_file(dir.path() / "blocker", "x");
    EXPECT_EQ(cli::cmd_run(dir.path() / "s.json", dir.path() / "blocker" / "o", {}, out, err), cli::kExitIo);
}

TEST(Sweep, SpecParsing)
{
    const auto spec = sweep::sweep_from_json(json::parse(
        R"({"parameter": "fail_threshold", "values": [0.1, 0.3], "repetitions": 2,
            "schedulers": ["cave", "baseline"], "base": {"duration": 0.5, "seed": 10}})"));
    EXPECT_EQ(spec.parameter, sweep::SweepParameter::FailThreshold);
    EXPECT_EQ(spec.values.size(), 2u);
    EXPECT_EQ(spec.schedulers.size(), 2u);
    const auto c = sweep::point_config(spec, sim::SchedulerKind::Baseline, 0.3, 1);
    EXPECT_EQ(c.fail_threshold, 0.3);
    EXPECT_EQ(c.seed, 11u);
    EXPECT_EQ(c.scheduler, sim::SchedulerKind::Baseline);

    for (const char* text :
         {R"({"parameter": "speed", "values": [1]})", R"({"parameter": "fail_threshold", "values": []})",
          R"({"parameter": "fail_threshold", "values": [0.1], "repetitions": 0})",
          R"({"parameter": "fail_threshold", "values": [2.0]})",
          R"({"parameter": "fail_threshold", "values": [0.1], "extra": 1})"})
        EXPECT_THROW(sweep::sweep_from_json(json::parse(text)), io::ConfigError) << text;
}

TEST(CmdSweep, SingleRow)
{
    TempDir dir;
    write_file(dir.path() / "sw.json",
               R"({"parameter": "arrival_intensity", "values": [10], "repetitions": 1,
                   "base": {"duration": 0.5}})");
    std::ostringstream out, err;
    ASSERT_EQ(cli::cmd_sweep(dir.path() / "sw.json", dir.path() / "o", 1, out, err), cli::kExitOk) << err.str();
    const auto csv = read_file(dir.path() / "o" / "sweep.csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), sweep::kSweepCsvHeader);
    EXPECT_EQ(csv.find("cave,arrival_intensity,10,0,", csv.find('\n')), csv.find('\n') + 1);
}

TEST(CmdSweep, ParallelMatchesSerial)
{
    TempDir dir;
    write_file(dir.path() / "sw.json",
               R"({"parameter": "fail_threshold", "values": [0.1, 0.4], "repetitions": 2,
                   "schedulers": ["baseline", "cave"], "base": {"duration": 0.3}})");
    std::ostringstream out, err;
    ASSERT_EQ(cli::cmd_sweep(dir.path() / "sw.json", dir.path() / "serial", 1, out, err), cli::kExitOk);
    ASSERT_EQ(cli::cmd_sweep(dir.path() / "sw.json", dir.path() / "parallel", 3, out, err), cli::kExitOk);
    const auto serial = read_file(dir.path() / "serial" / "sweep.csv");
    EXPECT_EQ(serial, read_file(dir.path() / "parallel" / "sweep.csv"));
    EXPECT_EQ(std::count(serial.begin(), serial.end(), '\n'), 9);
    // Listed scheduler order, then value, then repetition.
    std::istringstream lines(serial);
    std::string line;
    std::getline(lines, line);
    std::getline(lines, line);
    EXPECT_EQ(line.rfind("baseline,fail_threshold,0.1,0,", 0), 0u);
    std::getline(lines, line);
    EXPECT_EQ(line.rfind("baseline,fail_threshold,0.1,1,", 0), 0u);
    std::getline(lines, line);
    EXPECT_EQ(line.rfind("baseline,fail_threshold,0.4,0,", 0), 0u);
}

TEST(CmdSweep, ErrorCodes)
{
    TempDir dir;
    std::ostringstream out, err;
    EXPECT_EQ(cli::cmd_sweep(dir.path() / "missing.json", dir.path() / "o", 1, out, err), cli::kExitIo);
    write_file(dir.path() / "bad.json", R"({"parameter": "fail_threshold", "values": []})");
    EXPECT_EQ(cli::cmd_sweep(dir.path() / "bad.json", dir.path() / "o", 1, out, err), cli::kExitInvalid);
}

TEST(CmdOracle, UnknownSuite)
{
    std::ostringstream out, err;
    EXPECT_EQ(cli::cmd_oracle("everything", out, err), cli::kExitInvalid);
}

TEST(CmdOracle, AllocationSuitePasses)
{
    std::ostringstream out, err;
    EXPECT_EQ(cli::cmd_oracle("allocation", out, err), cli::kExitOk);
    EXPECT_NE(out.str().find("max_gap="), std::string::npos);
}

TEST(Main, ArgumentErrors)
{
    std::ostringstream out, err;
    EXPECT_EQ(cli::main({"cave"}, out, err), cli::kExitInvalid);
    EXPECT_EQ(cli::main({"cave", "fly"}, out, err), cli::kExitInvalid);
    EXPECT_EQ(cli::main({"cave", "run", "--seed", "abc"}, out, err), cli::kExitInvalid);
    EXPECT_EQ(cli::main({"cave", "sweep"}, out, err), cli::kExitInvalid);
    EXPECT_EQ(cli::main({"cave", "oracle", "nothing"}, out, err), cli::kExitInvalid);
    EXPECT_EQ(cli::main({"cave", "--help"}, out, err), cli::kExitOk);
}

TEST(Main, RunThroughFlags)
{
    TempDir dir;
    write_file(dir.path() / "s.json", kShortScenario);
    std::ostringstream out, err;
    const auto o = (dir.path() / "o").string();
    ASSERT_EQ(cli::main({"cave", "run", "--config", (dir.path() / "s.json").string(), "--out", o, "--seed", "21",
                         "--scheduler", "baseline", "--duration", "0.5"},
                        out, err),
              cli::kExitOk)
        << err.str();
    const auto summary = json::parse(read_file(dir.path() / "o" / "summary.json"));
    EXPECT_EQ(summary["seed"], 21);
    EXPECT_EQ(summary["scheduler"], "baseline");
    EXPECT_EQ(summary["config"]["duration"], 0.5);
}

TEST(Binary, ExitCodesFromProcess)
{
    TempDir dir;
    write_file(dir.path() / "s.json", R"({"duration": 0.2})");
    const std::string tool = CAVE_TOOL_PATH;
    const auto quiet = " > /dev/null 2>&1";
    auto status = [](int raw_status) { return WEXITSTATUS(raw_status); };
    EXPECT_EQ(status(std::system((tool + " run --config " + (dir.path() / "s.json").string() + " --out " +
                                  (dir.path() / "o").string() + quiet)
                                     .c_str())),
              0);
    EXPECT_TRUE(fs::exists(dir.path() / "o" / "tasks.csv"));
    EXPECT_EQ(status(std::system((tool + " oracle bogus" + quiet).c_str())), 2);
    EXPECT_EQ(status(std::system((tool + " run --config /nonexistent/x.json" + quiet).c_str())), 3);
}
