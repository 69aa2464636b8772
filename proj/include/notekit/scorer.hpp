#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "notekit/rating_matrix.hpp"
#include "notekit/types.hpp"

namespace notekit {

struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StatusThresholds {
  double helpful_min_intercept = 0.40;
  double not_helpful_max_intercept = -0.05;
  int min_raters = 5;
};

struct ScorerConfig {
  double lambda_intercept = 0.15;  // five times lambda_factor at defaults
  double lambda_factor = 0.03;
  int factor_dim = 1;
  // Step per epoch is learning_rate scaled by each parameter's cell count;
  // halved whenever a step would increase the loss.
  double learning_rate = 0.25;
  int max_epochs = 3000;
  double convergence_tol = 1e-10;  // relative loss delta
  std::uint64_t seed = 7;
  StatusThresholds thresholds;
};

// Fitted parameters of one factorization run. Shared by the 1-dim selection
// scorer and the high-dimensional rater embedder; rows of the factor matrices
// line up with note_ids / rater_ids, which follow the training matrix order.
struct ScoringModel {
  double mu = 0.0;
  std::vector<NoteId> note_ids;
  std::vector<RaterId> rater_ids;
  std::unordered_map<NoteId, int> note_index;
  std::unordered_map<RaterId, int> rater_index;
  Eigen::VectorXd note_intercepts;
  Eigen::VectorXd rater_intercepts;
  Eigen::MatrixXd note_factors;   // notes x factor_dim
  Eigen::MatrixXd rater_factors;  // raters x factor_dim
  double final_loss = 0.0;
  std::vector<double> epoch_losses;

  int factor_dim() const { return static_cast<int>(note_factors.cols()); }
  std::optional<int> note_row(const NoteId& id) const;
  std::optional<int> rater_row(const RaterId& id) const;
};

struct Prediction {
  double value = 0.0;
  bool cold_start = false;  // some id was missing; unknown terms contribute 0
};

// mu + i_u + i_n + f_u . f_n with whatever terms the model knows.
Prediction predict(const ScoringModel& model, const RaterId& rater, const NoteId& note);

// Squared-error data term plus intercept and factor penalties, each parameter
// counted once, no averaging.
double loss(const ScoringModel& model, const RatingMatrix& matrix,
            const ScorerConfig& config);

// Parameter packing used by the gradient (layout: mu, rater intercepts, note
// intercepts, rater factors row-major, note factors row-major).
Eigen::VectorXd pack_parameters(const ScoringModel& model);
void unpack_parameters(const Eigen::VectorXd& packed, ScoringModel& model);
Eigen::VectorXd loss_gradient(const ScoringModel& model, const RatingMatrix& matrix,
                              const ScorerConfig& config);

// Deterministic full-batch descent from a seeded near-zero initialization.
// Throws TrainingError if the loss turns non-finite.
ScoringModel fit(const RatingMatrix& matrix, const ScorerConfig& config);

NoteStatus assign_status(const ScoringModel& model, const NoteId& note,
                         int rater_count, const StatusThresholds& thresholds);

struct StatusTimeline {
  NoteId note_id;
  std::vector<StatusEntry> entries;  // strictly increasing in `at`
  bool displayed = false;
  bool disappeared = false;

  std::optional<EpochMs> display_time() const;  // first CurrentlyRatedHelpful
  NoteStatus final_status() const;
};

// Replays the rolling re-scoring process: at each interval boundary, refit on
// all events so far and append an entry for every note whose status changed.
std::vector<StatusTimeline> replay(std::span<const RatingEvent> events_by_time,
                                   const ScorerConfig& config,
                                   EpochMs rescore_interval);

struct Histogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::int64_t> counts;
};

Histogram make_histogram(std::span<const double> values, int bins);

struct ScorerDiagnostics {
  Histogram intercepts;
  Histogram factors;
  double status_match_rate = 0.0;   // over notes present in the reference
  std::size_t compared = 0;
  std::size_t missing_reference = 0;
};

ScorerDiagnostics diagnostics(const ScoringModel& model,
                              std::span<const StatusTimeline> timelines,
                              const std::unordered_map<NoteId, NoteStatus>& reference);

// scores.tsv: noteId, intercept, factor, status (statuses under the given
// thresholds with the matrix's per-note rater counts).
void write_scores_tsv(const std::string& path, const ScoringModel& model,
                      const RatingMatrix& matrix, const StatusThresholds& thresholds);

// timelines.tsv shares the status.tsv columns; a timeline flattens to its
// entries and is rebuilt from them.
void write_timelines_tsv(const std::string& path,
                         std::span<const StatusTimeline> timelines);
std::vector<StatusTimeline> timelines_from_entries(std::span<const StatusEntry> entries);

}  // namespace notekit
