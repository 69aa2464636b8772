#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace notekit {

using NoteId = std::string;
using RaterId = std::string;
using PostId = std::string;
using EpochMs = std::int64_t;

// One quarter = 15 minutes, the time bin all panel machinery works in.
constexpr EpochMs kQuarterMs = 15LL * 60 * 1000;

enum class HelpfulnessLevel { NotHelpful, SomewhatHelpful, Helpful };

double level_value(HelpfulnessLevel level);  // 0.0 / 0.5 / 1.0
const char* level_name(HelpfulnessLevel level);
std::optional<HelpfulnessLevel> parse_level(std::string_view text);

enum class NoteStatus { NeedsMoreRatings, CurrentlyRatedHelpful, CurrentlyRatedNotHelpful };

const char* status_name(NoteStatus status);
std::optional<NoteStatus> parse_status(std::string_view text);

// One rater's helpfulness judgment of one note. A (note, rater) pair may
// repeat across time; only the latest event per pair enters a rating matrix.
struct RatingEvent {
  NoteId note_id;
  RaterId rater_id;
  EpochMs created_at = 0;
  HelpfulnessLevel level = HelpfulnessLevel::NotHelpful;

  double value() const { return level_value(level); }
};

struct NoteRecord {
  NoteId note_id;
  RaterId writer_id;
  PostId post_id;
  EpochMs created_at = 0;
  std::vector<std::string> cited_domains;
};

struct PostRecord {
  PostId post_id;
  std::string author_id;
  bool topic_politics = false;
  bool topic_science = false;
  bool topic_health = false;
  bool topic_economy = false;
  double sentiment_pos = 0.0;
  double sentiment_neg = 0.0;
  bool has_media = false;
  bool verified = false;
  double account_age_days = 0.0;
  std::int64_t followers = 0;
  std::int64_t followees = 0;
  double misinfo_exposure = 0.0;  // [0, 1]
  double partisan_score = 0.0;    // [-1, +1]
};

struct StatusEntry {
  NoteId note_id;
  EpochMs at = 0;
  NoteStatus status = NoteStatus::NeedsMoreRatings;
};

// One (note, quarter) cell of an interrupted-time-series panel.
// post_display is 1 exactly when quarter >= 0; quarters_since is
// post_display * max(quarter, 0).
struct PanelObservation {
  NoteId note_id;
  int quarter = 0;
  int post_display = 0;
  int quarters_since = 0;
  std::int64_t rating_count = 0;
  std::int64_t rating_leaning = 0;
};

}  // namespace notekit
