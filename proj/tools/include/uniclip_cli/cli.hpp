#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace uniclip::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

/// Environment variable naming the default output directory.
inline constexpr const char* kOutputEnv = "UNICLIP_OUT";

struct Invocation {
  std::string subcommand;
  std::optional<std::filesystem::path> config_path;
  std::vector<std::string> overrides;
  std::filesystem::path output_dir;
  std::optional<std::uint64_t> seed;
  std::string axis = "loss";  // ablate only
  std::size_t seeds = 5;      // ablate, loss-compare, sim-density
  std::size_t oracle_instances = 100;  // grad-check
};

/// Parses argv (including the program name) and runs the subcommand. Diagnostics go to
/// `err`, tables and reports to `out`. Returns the documented exit code.
int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace uniclip::cli
