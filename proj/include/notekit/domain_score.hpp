#pragma once

#include <optional>

#include "notekit/tsv.hpp"
#include "notekit/types.hpp"

namespace notekit {

// Mean bias score over the note's cited domains that appear in the lookup;
// absent when none do. Scores are in {-1, -0.5, 0, +0.5, +1}, negative = left.
std::optional<double> domain_bias_score(const NoteRecord& note,
                                        const ScoreLookup& bias_lookup);

struct QualityScore {
  double value;  // mean over matched domains, in [0, 1]
  bool high;     // value >= 0.5
};

std::optional<QualityScore> domain_quality_score(const NoteRecord& note,
                                                 const ScoreLookup& quality_lookup);

}  // namespace notekit
