#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace notekit {

struct UsageError : std::runtime_error {  // exit code 1
  using std::runtime_error::runtime_error;
};

struct StageError : std::runtime_error {  // exit code 2
  using std::runtime_error::runtime_error;
};

struct RunOptions {
  std::filesystem::path config_path;
  std::filesystem::path run_dir = "run";
  std::optional<std::uint64_t> seed_override;  // rewrites sim.seed
  bool force = false;  // break stale locks, accept config-hash changes
};

// Topological order; "all" executes exactly this sequence.
const std::vector<std::string>& stage_names();

// Executes one stage (or "all") against the run directory, updating
// manifest.json there. Returns the manifest path.
std::filesystem::path run(const std::string& stage, const RunOptions& options);

}  // namespace notekit
