#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "notekit/embedder.hpp"
#include "notekit/scorer.hpp"
#include "notekit/types.hpp"

namespace notekit {

struct ExclusionPolicy {
  std::set<RaterClass> groups;  // rater classes whose ratings are dropped
  bool all_ratings = false;     // false: drop post-display ratings only
};

struct ExclusionReport {
  std::size_t removed_total = 0;
  std::map<RaterClass, std::size_t> removed_by_group;
  std::map<NoteId, std::size_t> removed_by_note;
};

// note -> rater -> class lookup; pairs without a relation row are General.
class RelationIndex {
 public:
  RelationIndex() = default;
  explicit RelationIndex(std::span<const NoteRaterRelation> relations);
  RaterClass at(const NoteId& note, const RaterId& rater) const;

 private:
  std::unordered_map<NoteId, std::unordered_map<RaterId, RaterClass>> by_note_;
};

// Removes exactly the events whose rater class is excluded and, under the
// post-display scope, whose timestamp is at or after the note's display time
// (never-displayed notes keep everything). Excluding every class with
// all_ratings scope is rejected outright.
std::vector<RatingEvent> apply_policy(std::span<const RatingEvent> events,
                                      const RelationIndex& relations,
                                      std::span<const StatusTimeline> timelines,
                                      const ExclusionPolicy& policy,
                                      ExclusionReport* report = nullptr);

enum class Cohort { Disappeared, Stable, NeverDisplayed };

std::string cohort_name(Cohort c);

struct NoteDelta {
  NoteId note_id;
  Cohort cohort = Cohort::NeverDisplayed;
  double intercept_orig = 0.0;
  double intercept_cf = 0.0;
  double delta = 0.0;  // counterfactual - original
  NoteStatus status_orig = NoteStatus::NeedsMoreRatings;
  NoteStatus status_cf = NoteStatus::NeedsMoreRatings;
};

struct CohortSummary {
  Cohort cohort = Cohort::NeverDisplayed;
  std::size_t n = 0;
  double mean_delta = 0.0;
  double ci_low = 0.0;   // seeded percentile bootstrap of the mean
  double ci_high = 0.0;
};

struct DeltaReport {
  std::vector<NoteDelta> notes;  // note-id order
  std::vector<CohortSummary> cohorts;
  std::size_t would_have_survived = 0;  // not helpful originally, helpful after
  std::size_t would_have_vanished = 0;
  std::vector<NoteId> dropped;  // lost every rating; excluded from deltas
};

// Fits the scorer on both streams with the identical config (same seed) and
// pairs notes by id. Cohorts come from the replay timelines of the original
// stream: displayed-and-lost-it, displayed-and-kept-it, never displayed.
DeltaReport rescore_diff(std::span<const RatingEvent> original,
                         std::span<const RatingEvent> filtered,
                         const ScorerConfig& config,
                         std::span<const StatusTimeline> timelines,
                         std::uint64_t bootstrap_seed = 99,
                         int bootstrap_samples = 1000);

void write_counterfactual_tsv(const std::filesystem::path& path,
                              const DeltaReport& report);
void write_counterfactual_summary_tsv(const std::filesystem::path& path,
                                      const DeltaReport& report);

}  // namespace notekit
