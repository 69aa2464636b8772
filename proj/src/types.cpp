#include "notekit/types.hpp"

namespace notekit {

double level_value(HelpfulnessLevel level) {
  switch (level) {
    case HelpfulnessLevel::NotHelpful: return 0.0;
    case HelpfulnessLevel::SomewhatHelpful: return 0.5;
    case HelpfulnessLevel::Helpful: return 1.0;
  }
  return 0.0;
}

const char* level_name(HelpfulnessLevel level) {
  switch (level) {
    case HelpfulnessLevel::NotHelpful: return "NOT_HELPFUL";
    case HelpfulnessLevel::SomewhatHelpful: return "SOMEWHAT_HELPFUL";
    case HelpfulnessLevel::Helpful: return "HELPFUL";
  }
  return "NOT_HELPFUL";
}

std::optional<HelpfulnessLevel> parse_level(std::string_view text) {
  if (text == "HELPFUL") return HelpfulnessLevel::Helpful;
  if (text == "SOMEWHAT_HELPFUL") return HelpfulnessLevel::SomewhatHelpful;
  if (text == "NOT_HELPFUL") return HelpfulnessLevel::NotHelpful;
  return std::nullopt;
}

const char* status_name(NoteStatus status) {
  switch (status) {
    case NoteStatus::NeedsMoreRatings: return "NEEDS_MORE_RATINGS";
    case NoteStatus::CurrentlyRatedHelpful: return "CURRENTLY_RATED_HELPFUL";
    case NoteStatus::CurrentlyRatedNotHelpful: return "CURRENTLY_RATED_NOT_HELPFUL";
  }
  return "NEEDS_MORE_RATINGS";
}

std::optional<NoteStatus> parse_status(std::string_view text) {
  if (text == "NEEDS_MORE_RATINGS") return NoteStatus::NeedsMoreRatings;
  if (text == "CURRENTLY_RATED_HELPFUL") return NoteStatus::CurrentlyRatedHelpful;
  if (text == "CURRENTLY_RATED_NOT_HELPFUL") return NoteStatus::CurrentlyRatedNotHelpful;
  return std::nullopt;
}

}  // namespace notekit
