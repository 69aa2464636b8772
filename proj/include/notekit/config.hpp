#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "notekit/counterfactual.hpp"
#include "notekit/embedder.hpp"
#include "notekit/scorer.hpp"
#include "notekit/simulator.hpp"

namespace notekit {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat key=value file with dotted sections (sim.*, scorer.*, embedder.*,
// run.*, counterfactual.*). '#' starts a comment line; unknown keys are
// rejected. Values keep their textual form until a typed getter reads them.
class Config {
 public:
  static Config load(const std::filesystem::path& path);
  static Config from_string(const std::string& text);

  ScorerConfig scorer() const;
  EmbedderConfig embedder() const;
  SimConfig sim() const;
  ExclusionPolicy counterfactual_policy() const;

  EpochMs rescore_interval() const;   // run.rescore_interval_minutes, default 60
  int bootstrap_samples() const;      // run.bootstrap_samples, default 1000
  std::uint64_t bootstrap_seed() const;

  void override_seed(std::uint64_t seed);  // rewrites sim.seed

  // FNV-1a over the sorted key=value lines; identical settings hash equal
  // regardless of file formatting.
  std::string hash() const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  double number(const std::string& key, double fallback) const;
  std::int64_t integer(const std::string& key, std::int64_t fallback) const;
  bool flag(const std::string& key, bool fallback) const;
  std::string text(const std::string& key, const std::string& fallback) const;

  std::map<std::string, std::string> values_;
};

std::uint64_t fnv1a(std::string_view bytes);
std::string fnv1a_hex(std::string_view bytes);

}  // namespace notekit
