#include "notekit/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace notekit {

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "sim.n_raters", "sim.n_notes", "sim.cluster_mix", "sim.latent_dim",
      "sim.cluster_sep", "sim.latent_noise", "sim.similar_share",
      "sim.general_share", "sim.dissimilar_share", "sim.base_rate",
      "sim.display_jump", "sim.sustained_growth", "sim.shift_similar",
      "sim.shift_general", "sim.shift_dissimilar", "sim.attack_fraction",
      "sim.attack_attackers_per_wave", "sim.attack_wave_start_quarter",
      "sim.attack_cohort_size", "sim.horizon", "sim.displayed_fraction",
      "sim.quality_sd", "sim.cos_weight", "sim.quality_weight",
      "sim.somewhat_prob", "sim.seed", "sim.stream_start",
      "scorer.lambda_intercept", "scorer.lambda_factor", "scorer.factor_dim",
      "scorer.learning_rate", "scorer.max_epochs", "scorer.convergence_tol",
      "scorer.seed", "scorer.helpful_min_intercept",
      "scorer.not_helpful_max_intercept", "scorer.min_raters",
      "embedder.factor_dim", "embedder.epochs", "embedder.min_ratings_per_note",
      "embedder.min_ratings_per_rater", "embedder.min_corated_notes",
      "embedder.similar_threshold", "embedder.dissimilar_threshold",
      "embedder.recompute_thresholds", "embedder.learning_rate",
      "embedder.batch_size", "embedder.seed",
      "run.rescore_interval_minutes", "run.bootstrap_samples",
      "run.bootstrap_seed",
      "counterfactual.groups", "counterfactual.scope",
  };
  return keys;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::from_string(const std::string& content) {
  Config config;
  std::istringstream in(content);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    if (!known_keys().count(key))
      throw ConfigError("unknown config key: " + key);
    config.values_[key] = value;
  }
  return config;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return from_string(buffer.str());
}

double Config::number(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string& s = it->second;
  double out = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ConfigError("config key " + key + ": not a number: " + s);
  return out;
}

std::int64_t Config::integer(const std::string& key, std::int64_t fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string& s = it->second;
  std::int64_t out = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ConfigError("config key " + key + ": not an integer: " + s);
  return out;
}

bool Config::flag(const std::string& key, bool fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw ConfigError("config key " + key + ": expected true/false: " + it->second);
}

std::string Config::text(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

ScorerConfig Config::scorer() const {
  ScorerConfig c;
  c.lambda_intercept = number("scorer.lambda_intercept", c.lambda_intercept);
  c.lambda_factor = number("scorer.lambda_factor", c.lambda_factor);
  c.factor_dim = static_cast<int>(integer("scorer.factor_dim", c.factor_dim));
  c.learning_rate = number("scorer.learning_rate", c.learning_rate);
  c.max_epochs = static_cast<int>(integer("scorer.max_epochs", c.max_epochs));
  c.convergence_tol = number("scorer.convergence_tol", c.convergence_tol);
  c.seed = static_cast<std::uint64_t>(integer("scorer.seed",
                                              static_cast<std::int64_t>(c.seed)));
  c.thresholds.helpful_min_intercept =
      number("scorer.helpful_min_intercept", c.thresholds.helpful_min_intercept);
  c.thresholds.not_helpful_max_intercept =
      number("scorer.not_helpful_max_intercept", c.thresholds.not_helpful_max_intercept);
  c.thresholds.min_raters =
      static_cast<int>(integer("scorer.min_raters", c.thresholds.min_raters));
  if (c.thresholds.helpful_min_intercept <= c.thresholds.not_helpful_max_intercept)
    throw ConfigError("helpful threshold must exceed the not-helpful threshold");
  if (c.thresholds.min_raters < 1) throw ConfigError("scorer.min_raters must be >= 1");
  return c;
}

EmbedderConfig Config::embedder() const {
  EmbedderConfig c;
  c.factor_dim = static_cast<int>(integer("embedder.factor_dim", c.factor_dim));
  c.epochs = static_cast<int>(integer("embedder.epochs", c.epochs));
  c.min_ratings_per_note =
      static_cast<int>(integer("embedder.min_ratings_per_note", c.min_ratings_per_note));
  c.min_ratings_per_rater =
      static_cast<int>(integer("embedder.min_ratings_per_rater", c.min_ratings_per_rater));
  c.min_corated_notes =
      static_cast<int>(integer("embedder.min_corated_notes", c.min_corated_notes));
  c.similar_threshold = number("embedder.similar_threshold", c.similar_threshold);
  c.dissimilar_threshold = number("embedder.dissimilar_threshold", c.dissimilar_threshold);
  c.recompute_thresholds = flag("embedder.recompute_thresholds", c.recompute_thresholds);
  c.learning_rate = number("embedder.learning_rate", c.learning_rate);
  c.batch_size = static_cast<int>(integer("embedder.batch_size", c.batch_size));
  c.seed = static_cast<std::uint64_t>(integer("embedder.seed",
                                              static_cast<std::int64_t>(c.seed)));
  if (c.dissimilar_threshold >= c.similar_threshold)
    throw ConfigError("dissimilar threshold must be below the similar threshold");
  if (c.min_ratings_per_note < 1 || c.min_ratings_per_rater < 1 ||
      c.min_corated_notes < 1)
    throw ConfigError("embedder minimums must be >= 1");
  return c;
}

SimConfig Config::sim() const {
  SimConfig c;
  c.n_raters = static_cast<int>(integer("sim.n_raters", c.n_raters));
  c.n_notes = static_cast<int>(integer("sim.n_notes", c.n_notes));
  if (auto it = values_.find("sim.cluster_mix"); it != values_.end()) {
    c.cluster_mix.clear();
    std::istringstream parts(it->second);
    std::string piece;
    while (std::getline(parts, piece, ',')) {
      piece = trim(piece);
      double v = 0.0;
      auto [p, ec] = std::from_chars(piece.data(), piece.data() + piece.size(), v);
      if (ec != std::errc() || p != piece.data() + piece.size())
        throw ConfigError("sim.cluster_mix: not a number: " + piece);
      c.cluster_mix.push_back(v);
    }
  }
  c.latent_dim = static_cast<int>(integer("sim.latent_dim", c.latent_dim));
  c.cluster_sep = number("sim.cluster_sep", c.cluster_sep);
  c.latent_noise = number("sim.latent_noise", c.latent_noise);
  c.similar_share = number("sim.similar_share", c.similar_share);
  c.general_share = number("sim.general_share", c.general_share);
  c.dissimilar_share = number("sim.dissimilar_share", c.dissimilar_share);
  c.base_rate = number("sim.base_rate", c.base_rate);
  c.display_jump = number("sim.display_jump", c.display_jump);
  c.sustained_growth = number("sim.sustained_growth", c.sustained_growth);
  c.leaning_shift.similar = number("sim.shift_similar", c.leaning_shift.similar);
  c.leaning_shift.general = number("sim.shift_general", c.leaning_shift.general);
  c.leaning_shift.dissimilar = number("sim.shift_dissimilar", c.leaning_shift.dissimilar);
  c.attack.fraction = number("sim.attack_fraction", c.attack.fraction);
  c.attack.attackers_per_wave = static_cast<int>(
      integer("sim.attack_attackers_per_wave", c.attack.attackers_per_wave));
  c.attack.wave_start_quarter = static_cast<int>(
      integer("sim.attack_wave_start_quarter", c.attack.wave_start_quarter));
  c.attack.cohort_size =
      static_cast<int>(integer("sim.attack_cohort_size", c.attack.cohort_size));
  c.horizon = static_cast<int>(integer("sim.horizon", c.horizon));
  c.displayed_fraction = number("sim.displayed_fraction", c.displayed_fraction);
  c.quality_sd = number("sim.quality_sd", c.quality_sd);
  c.cos_weight = number("sim.cos_weight", c.cos_weight);
  c.quality_weight = number("sim.quality_weight", c.quality_weight);
  c.somewhat_prob = number("sim.somewhat_prob", c.somewhat_prob);
  c.seed = static_cast<std::uint64_t>(integer("sim.seed",
                                              static_cast<std::int64_t>(c.seed)));
  c.stream_start = integer("sim.stream_start", c.stream_start);
  validate(c);
  return c;
}

ExclusionPolicy Config::counterfactual_policy() const {
  ExclusionPolicy policy;
  std::string groups = text("counterfactual.groups", "similar,dissimilar");
  std::istringstream parts(groups);
  std::string piece;
  while (std::getline(parts, piece, ',')) {
    piece = trim(piece);
    if (piece.empty()) continue;
    std::transform(piece.begin(), piece.end(), piece.begin(),
                   [](unsigned char ch) { return std::tolower(ch); });
    if (piece == "similar") policy.groups.insert(RaterClass::Similar);
    else if (piece == "general") policy.groups.insert(RaterClass::General);
    else if (piece == "dissimilar") policy.groups.insert(RaterClass::Dissimilar);
    else throw ConfigError("counterfactual.groups: unknown group: " + piece);
  }
  std::string scope = text("counterfactual.scope", "post_display");
  if (scope == "post_display") policy.all_ratings = false;
  else if (scope == "all") policy.all_ratings = true;
  else throw ConfigError("counterfactual.scope must be post_display or all");
  return policy;
}

EpochMs Config::rescore_interval() const {
  auto minutes = integer("run.rescore_interval_minutes", 60);
  if (minutes <= 0) throw ConfigError("run.rescore_interval_minutes must be positive");
  return minutes * 60 * 1000;
}

int Config::bootstrap_samples() const {
  auto n = integer("run.bootstrap_samples", 1000);
  if (n < 1) throw ConfigError("run.bootstrap_samples must be >= 1");
  return static_cast<int>(n);
}

std::uint64_t Config::bootstrap_seed() const {
  return static_cast<std::uint64_t>(integer("run.bootstrap_seed", 99));
}

void Config::override_seed(std::uint64_t seed) {
  values_["sim.seed"] = std::to_string(seed);
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = fnv1a(bytes);
  std::string out(16, '0');
  static const char* digits = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

std::string Config::hash() const {
  std::string canon;
  for (const auto& [key, value] : values_) {
    canon += key;
    canon += '=';
    canon += value;
    canon += '\n';
  }
  return fnv1a_hex(canon);
}

}  // namespace notekit
