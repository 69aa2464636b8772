#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "notekit/types.hpp"

namespace notekit {

struct AttackConfig {
  double fraction = 0.0;       // share of displayed (non-attacker-written) notes hit
  int attackers_per_wave = 20;
  int wave_start_quarter = 1;  // offset from the display quarter
  int cohort_size = 60;        // attackers drawn from the last latent cluster
};

struct LeaningShifts {  // additive post-display logit shift per rater group
  double similar = 0.3;
  double general = 0.15;
  double dissimilar = -0.3;
};

struct SimConfig {
  int n_raters = 400;
  int n_notes = 150;
  std::vector<double> cluster_mix = {0.5, 0.5};
  int latent_dim = 8;
  double cluster_sep = 1.0;   // centroid scale
  double latent_noise = 0.6;  // per-coordinate sd around the centroid
  double similar_share = 0.265;
  double general_share = 0.656;
  double dissimilar_share = 0.079;
  double base_rate = 1.2;  // mean ratings per note per quarter before display
  double display_jump = 1.4;
  double sustained_growth = 1.036;
  LeaningShifts leaning_shift;
  AttackConfig attack;
  int horizon = 40;  // quarters
  double displayed_fraction = 0.55;
  double quality_sd = 1.0;
  double cos_weight = 2.0;      // rating logit weight on rater-writer cosine
  double quality_weight = 1.0;  // rating logit weight on planted quality
  double somewhat_prob = 0.01;
  std::uint64_t seed = 1;
  EpochMs stream_start = 1704067200000;
};

void validate(const SimConfig& config);  // throws std::invalid_argument

struct Population {
  std::vector<RaterId> rater_ids;
  std::vector<int> cluster;
  Eigen::MatrixXd latent;  // n_raters x latent_dim
};

enum class SimGroup { Similar, General, Dissimilar, Attacker };

std::string sim_group_name(SimGroup g);

struct GroundTruth {
  std::vector<double> note_quality;       // by note index
  std::vector<int> display_quarter;       // -1 when never displayed
  std::vector<EpochMs> display_time;      // 0 when never displayed
  std::vector<char> attacked;             // by note index
  std::vector<SimGroup> rating_group;     // aligned with the final rating stream
};

struct LabeledEvent {
  RatingEvent event;
  SimGroup group = SimGroup::General;
};

Population generate_population(const SimConfig& config);

// Writers, planted quality, display schedule (top quality fraction, display
// quarter uniform in the window-safe range), cited domains.
std::vector<NoteRecord> generate_notes(const Population& population,
                                       const SimConfig& config, GroundTruth& truth);

// Organic stream: per note and quarter, Poisson volume at base_rate scaled by
// jump * growth^(q - display) once displayed; each rating picks a group by the
// configured shares, a rater from the matching latent pool, and a level from
// the logistic model.
std::vector<LabeledEvent> generate_ratings(const Population& population,
                                           const std::vector<NoteRecord>& notes,
                                           const GroundTruth& truth,
                                           const SimConfig& config);

// Adds NotHelpful waves from a fixed attacker cohort to a sampled set of
// displayed notes written outside the attacker cluster; marks truth.attacked.
void inject_attack(std::vector<LabeledEvent>& stream, const Population& population,
                   const std::vector<NoteRecord>& notes, GroundTruth& truth,
                   const SimConfig& config);

std::vector<PostRecord> generate_posts(const Population& population,
                                       const std::vector<NoteRecord>& notes,
                                       const GroundTruth& truth, const SimConfig& config);

struct SimResult {
  Population population;
  std::vector<NoteRecord> notes;
  std::vector<PostRecord> posts;
  std::vector<RatingEvent> ratings;  // sorted by (created_at, noteId, raterId)
  GroundTruth truth;                 // rating_group aligned with `ratings`
};

SimResult simulate(const SimConfig& config);

}  // namespace notekit
