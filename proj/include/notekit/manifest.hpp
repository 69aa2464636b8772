#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace notekit {

// FNV-1a of the file's bytes; streams, so large artifacts are fine.
std::string file_digest(const std::filesystem::path& path);

struct ArtifactRecord {
  std::string path;  // relative to the run directory
  std::string digest;
  std::int64_t rows = -1;  // -1 for non-tabular artifacts
};

struct StageRecord {
  std::string name;
  std::vector<ArtifactRecord> outputs;
  double wall_ms = 0.0;
};

struct RunManifest {
  std::string run_id;
  std::string config_hash;
  std::map<std::string, std::string> input_digests;
  std::map<std::string, std::uint64_t> seeds;
  std::vector<StageRecord> stages;  // execution order; one entry per stage name

  // Replaces any previous record for the same stage name, keeping order.
  void record(StageRecord stage);
  const StageRecord* stage(const std::string& name) const;

  void save(const std::filesystem::path& path) const;
  static RunManifest load(const std::filesystem::path& path);
};

}  // namespace notekit
