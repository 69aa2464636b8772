#include "notekit/rating_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace notekit {

std::vector<int> RatingMatrix::ratings_per_note() const {
  std::vector<int> counts(notes(), 0);
  for (const auto& c : cells) ++counts[c.note];
  return counts;
}

std::vector<int> RatingMatrix::ratings_per_rater() const {
  std::vector<int> counts(raters(), 0);
  for (const auto& c : cells) ++counts[c.rater];
  return counts;
}

std::vector<RatingEvent> RatingMatrix::expand(EpochMs at) const {
  std::vector<RatingEvent> events;
  events.reserve(cells.size());
  for (const auto& c : cells) {
    RatingEvent e;
    e.note_id = note_ids[c.note];
    e.rater_id = rater_ids[c.rater];
    e.created_at = at;
    e.level = c.value >= 0.75   ? HelpfulnessLevel::Helpful
              : c.value >= 0.25 ? HelpfulnessLevel::SomewhatHelpful
                                : HelpfulnessLevel::NotHelpful;
    events.push_back(std::move(e));
  }
  return events;
}

RatingMatrix latest_rating_matrix(std::span<const RatingEvent> events) {
  // Latest event per pair; ties on created_at resolve toward the larger level.
  std::map<std::pair<NoteId, RaterId>, std::pair<EpochMs, double>> latest;
  for (const auto& e : events) {
    auto key = std::make_pair(e.note_id, e.rater_id);
    auto candidate = std::make_pair(e.created_at, e.value());
    auto [it, inserted] = latest.emplace(key, candidate);
    if (!inserted && candidate > it->second) it->second = candidate;
  }

  RatingMatrix m;
  for (const auto& [key, _] : latest) {
    if (m.note_index.emplace(key.first, 0).second) m.note_ids.push_back(key.first);
    if (m.rater_index.emplace(key.second, 0).second) m.rater_ids.push_back(key.second);
  }
  std::sort(m.note_ids.begin(), m.note_ids.end());
  std::sort(m.rater_ids.begin(), m.rater_ids.end());
  for (std::size_t i = 0; i < m.note_ids.size(); ++i)
    m.note_index[m.note_ids[i]] = static_cast<int>(i);
  for (std::size_t i = 0; i < m.rater_ids.size(); ++i)
    m.rater_index[m.rater_ids[i]] = static_cast<int>(i);

  m.cells.reserve(latest.size());
  for (const auto& [key, stamp] : latest)
    m.cells.push_back({m.note_index[key.first], m.rater_index[key.second], stamp.second});
  std::sort(m.cells.begin(), m.cells.end(), [](const auto& a, const auto& b) {
    return std::make_pair(a.note, a.rater) < std::make_pair(b.note, b.rater);
  });
  return m;
}

}  // namespace notekit
