#pragma once

#include <span>
#include <unordered_map>
#include <vector>

#include "notekit/types.hpp"

namespace notekit {

// Sparse note x rater matrix holding one helpfulness value per pair.
// Ids are sorted so index order (and everything fitted downstream) is
// deterministic for a given event set.
struct RatingMatrix {
  struct Cell {
    int note;
    int rater;
    double value;
  };

  std::vector<NoteId> note_ids;    // index -> id, ascending
  std::vector<RaterId> rater_ids;  // index -> id, ascending
  std::unordered_map<NoteId, int> note_index;
  std::unordered_map<RaterId, int> rater_index;
  std::vector<Cell> cells;  // ascending (note, rater)

  std::size_t notes() const { return note_ids.size(); }
  std::size_t raters() const { return rater_ids.size(); }
  bool empty() const { return cells.empty(); }

  std::vector<int> ratings_per_note() const;
  std::vector<int> ratings_per_rater() const;

  // Rebuilds an event stream from the cells (all at the given timestamp,
  // values mapped back to the nearest level). Feeding the expansion back
  // through latest_rating_matrix reproduces this matrix.
  std::vector<RatingEvent> expand(EpochMs at = 1) const;
};

// Collapses an event stream to one cell per (note, rater) pair: the level of
// the maximal created_at wins; equal timestamps break toward the larger level.
RatingMatrix latest_rating_matrix(std::span<const RatingEvent> events);

}  // namespace notekit
