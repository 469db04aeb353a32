#pragma once

#include "cave/simulator.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace cave::cli
{

inline constexpr int kExitOk = 0;
inline constexpr int kExitTolerance = 1;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitIo = 3;

struct RunOverrides
{
    std::optional<std::uint64_t> seed;
    std::optional<std::string> scheduler;
    std::optional<double> duration;
};

// An empty config path runs the defaults.
int cmd_run(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
            const RunOverrides& overrides, std::ostream& out, std::ostream& err);

int cmd_sweep(const std::filesystem::path& sweep_path, const std::filesystem::path& out_dir, unsigned workers,
              std::ostream& out, std::ostream& err);

// suite: "allocation" or "assignment".
int cmd_oracle(const std::string& suite, std::ostream& out, std::ostream& err);

// Full command line, argv[0] included.
int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace cave::cli
