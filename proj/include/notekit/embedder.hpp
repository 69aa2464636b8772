#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "notekit/scorer.hpp"
#include "notekit/types.hpp"

namespace notekit {

struct FilterError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmbedderConfig {
  int factor_dim = 200;
  int epochs = 20;
  int min_ratings_per_note = 5;
  int min_ratings_per_rater = 5;
  int min_corated_notes = 5;
  double similar_threshold = 0.136;
  double dissimilar_threshold = -0.097;
  bool recompute_thresholds = false;  // replace the defaults with co-pair means
  double learning_rate = 0.05;
  int batch_size = 256;
  std::uint64_t seed = 11;
};

enum class RaterClass { Similar, General, Dissimilar };

std::string rater_class_name(RaterClass c);
RaterClass parse_rater_class(const std::string& text);

struct RaterRelation {
  RaterId writer_id;
  RaterId rater_id;
  double cosine = 0.0;
  RaterClass klass = RaterClass::General;
  bool missing_embedding = false;  // forced General, no cosine
};

struct FilterReport {
  std::size_t notes_removed = 0;
  std::size_t raters_removed = 0;
  int rounds = 0;
};

// Iterates note/rater minimum-rating removal to a fixed point.
RatingMatrix filter_dataset(std::span<const RatingEvent> events,
                            const EmbedderConfig& config,
                            FilterReport* report = nullptr);

// Unregularized factorization under mean-squared-error loss, mini-batch Adam
// with a cosine-annealed rate over seeded shuffles. epoch_losses holds the
// full-data MSE after each epoch.
ScoringModel fit_embeddings(const RatingMatrix& matrix, const EmbedderConfig& config);

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct ClassificationQuality {
  double weighted_f1 = 0.0;
  double weighted_precision = 0.0;
  double weighted_recall = 0.0;
  std::size_t n = 0;
};

// Binary helpful-vs-not quality of the fitted values on the observed cells;
// labels and predictions both thresholded at 0.5, classes weighted by support.
ClassificationQuality classification_quality(const ScoringModel& model,
                                             const RatingMatrix& matrix);

struct CopairStats {
  double same_mean = 0.0;
  double same_std = 0.0;
  double opposite_mean = 0.0;
  double opposite_std = 0.0;
  std::size_t same_count = 0;      // (pair, note) instances
  std::size_t opposite_count = 0;
  std::size_t pair_count = 0;      // qualifying pairs
  Histogram pooled;                // one cosine per qualifying pair
};

// Rater pairs co-rating >= min_corated_notes notes; each shared note where
// neither rating is SomewhatHelpful contributes the pair's cosine to the
// same- or opposite-rating split.
CopairStats copair_distributions(const RatingMatrix& matrix,
                                 const ScoringModel& embeddings,
                                 const EmbedderConfig& config);

// Relations of the given raters to the note's writer. Strict threshold
// inequalities; a missing embedding on either side yields General.
std::vector<RaterRelation> classify_relations(const NoteRecord& note,
                                              std::span<const RaterId> raters,
                                              const ScoringModel& embeddings,
                                              const EmbedderConfig& config);

struct NoteProjection {
  std::vector<NoteId> note_ids;
  Eigen::VectorXd projection;  // first principal component scores
  Eigen::VectorXd component;   // unit direction in factor space
  bool degenerate = false;     // factors had no variance; projection is zero
};

// Mean-centered first principal component of the note factor matrix, power
// iteration to 1e-8. When a 1-dim reference model is given, the sign is
// chosen so the projection correlates positively with its note factors.
NoteProjection project_note_factors(const ScoringModel& embeddings,
                                    const ScoringModel* reference = nullptr);

void write_embeddings(const std::filesystem::path& path, const ScoringModel& model);
ScoringModel read_embeddings(const std::filesystem::path& path);

// One row per (note, rater): the rater's relation to that note's writer.
struct NoteRaterRelation {
  NoteId note_id;
  RaterRelation relation;
};

void write_relations_tsv(const std::filesystem::path& path,
                         std::span<const NoteRaterRelation> relations);
std::vector<NoteRaterRelation> read_relations_tsv(const std::filesystem::path& path);

}  // namespace notekit
