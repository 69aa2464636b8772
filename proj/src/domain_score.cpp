#include "notekit/domain_score.hpp"

namespace notekit {

namespace {

std::optional<double> mean_over_lookup(const NoteRecord& note, const ScoreLookup& lookup) {
  double sum = 0;
  int hits = 0;
  for (const auto& domain : note.cited_domains) {
    auto it = lookup.find(domain);
    if (it == lookup.end()) continue;
    sum += it->second;
    ++hits;
  }
  if (hits == 0) return std::nullopt;
  return sum / hits;
}

}  // namespace

std::optional<double> domain_bias_score(const NoteRecord& note,
                                        const ScoreLookup& bias_lookup) {
  return mean_over_lookup(note, bias_lookup);
}

std::optional<QualityScore> domain_quality_score(const NoteRecord& note,
                                                 const ScoreLookup& quality_lookup) {
  auto mean = mean_over_lookup(note, quality_lookup);
  if (!mean) return std::nullopt;
  return QualityScore{*mean, *mean >= 0.5};
}

}  // namespace notekit
