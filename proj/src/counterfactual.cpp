#include "notekit/counterfactual.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "notekit/rng.hpp"
#include "notekit/tsv.hpp"

namespace notekit {

RelationIndex::RelationIndex(std::span<const NoteRaterRelation> relations) {
  for (const auto& r : relations)
    by_note_[r.note_id][r.relation.rater_id] = r.relation.klass;
}

RaterClass RelationIndex::at(const NoteId& note, const RaterId& rater) const {
  auto n = by_note_.find(note);
  if (n == by_note_.end()) return RaterClass::General;
  auto r = n->second.find(rater);
  return r == n->second.end() ? RaterClass::General : r->second;
}

std::vector<RatingEvent> apply_policy(std::span<const RatingEvent> events,
                                      const RelationIndex& relations,
                                      std::span<const StatusTimeline> timelines,
                                      const ExclusionPolicy& policy,
                                      ExclusionReport* report) {
  if (policy.all_ratings && policy.groups.size() == 3)
    throw std::invalid_argument(
        "excluding every rater class from all ratings empties the matrix");

  std::unordered_map<NoteId, EpochMs> display;
  for (const auto& tl : timelines)
    if (auto t = tl.display_time()) display[tl.note_id] = *t;

  ExclusionReport local;
  std::vector<RatingEvent> kept;
  kept.reserve(events.size());
  for (const auto& e : events) {
    RaterClass klass = relations.at(e.note_id, e.rater_id);
    bool excluded = policy.groups.count(klass) > 0;
    if (excluded && !policy.all_ratings) {
      auto d = display.find(e.note_id);
      excluded = d != display.end() && e.created_at >= d->second;
    }
    if (excluded) {
      ++local.removed_total;
      ++local.removed_by_group[klass];
      ++local.removed_by_note[e.note_id];
    } else {
      kept.push_back(e);
    }
  }
  if (report) *report = local;
  return kept;
}

std::string cohort_name(Cohort c) {
  switch (c) {
    case Cohort::Disappeared: return "disappeared";
    case Cohort::Stable: return "stable";
    default: return "never_displayed";
  }
}

DeltaReport rescore_diff(std::span<const RatingEvent> original,
                         std::span<const RatingEvent> filtered,
                         const ScorerConfig& config,
                         std::span<const StatusTimeline> timelines,
                         std::uint64_t bootstrap_seed, int bootstrap_samples) {
  if (original.empty() || filtered.empty())
    throw std::invalid_argument("rescore_diff requires non-empty event streams");

  RatingMatrix m_orig = latest_rating_matrix(original);
  RatingMatrix m_cf = latest_rating_matrix(filtered);
  ScoringModel fit_orig = fit(m_orig, config);
  ScoringModel fit_cf = fit(m_cf, config);
  std::vector<int> counts_orig = m_orig.ratings_per_note();
  std::vector<int> counts_cf = m_cf.ratings_per_note();

  std::unordered_map<NoteId, Cohort> cohort_of;
  for (const auto& tl : timelines) {
    Cohort c = Cohort::NeverDisplayed;
    if (tl.displayed) c = tl.disappeared ? Cohort::Disappeared : Cohort::Stable;
    cohort_of[tl.note_id] = c;
  }

  DeltaReport report;
  for (std::size_t n = 0; n < m_orig.notes(); ++n) {
    const NoteId& id = m_orig.note_ids[n];
    auto cf_row = fit_cf.note_row(id);
    if (!cf_row) {
      report.dropped.push_back(id);
      continue;
    }
    NoteDelta d;
    d.note_id = id;
    auto c = cohort_of.find(id);
    if (c != cohort_of.end()) d.cohort = c->second;
    d.intercept_orig = fit_orig.note_intercepts[static_cast<Eigen::Index>(n)];
    d.intercept_cf = fit_cf.note_intercepts[*cf_row];
    d.delta = d.intercept_cf - d.intercept_orig;
    d.status_orig = assign_status(fit_orig, id, counts_orig[n], config.thresholds);
    d.status_cf = assign_status(fit_cf, id, counts_cf[static_cast<std::size_t>(*cf_row)],
                                config.thresholds);
    bool helpful_orig = d.status_orig == NoteStatus::CurrentlyRatedHelpful;
    bool helpful_cf = d.status_cf == NoteStatus::CurrentlyRatedHelpful;
    if (!helpful_orig && helpful_cf) ++report.would_have_survived;
    if (helpful_orig && !helpful_cf) ++report.would_have_vanished;
    report.notes.push_back(std::move(d));
  }

  Rng rng(bootstrap_seed);
  for (Cohort c : {Cohort::Disappeared, Cohort::Stable, Cohort::NeverDisplayed}) {
    std::vector<double> deltas;
    for (const auto& d : report.notes)
      if (d.cohort == c) deltas.push_back(d.delta);
    CohortSummary s;
    s.cohort = c;
    s.n = deltas.size();
    if (!deltas.empty()) {
      double sum = 0.0;
      for (double v : deltas) sum += v;
      s.mean_delta = sum / static_cast<double>(deltas.size());
      std::vector<double> means;
      means.reserve(static_cast<std::size_t>(bootstrap_samples));
      for (int b = 0; b < bootstrap_samples; ++b) {
        double bs = 0.0;
        for (std::size_t i = 0; i < deltas.size(); ++i)
          bs += deltas[static_cast<std::size_t>(
              rng.uniform_int(static_cast<int>(deltas.size())))];
        means.push_back(bs / static_cast<double>(deltas.size()));
      }
      std::sort(means.begin(), means.end());
      auto pick = [&](double q) {
        double at = q * static_cast<double>(means.size() - 1);
        auto lo = static_cast<std::size_t>(std::floor(at));
        auto hi = std::min(means.size() - 1, lo + 1);
        double w = at - std::floor(at);
        return means[lo] * (1.0 - w) + means[hi] * w;
      };
      s.ci_low = pick(0.025);
      s.ci_high = pick(0.975);
    }
    report.cohorts.push_back(s);
  }
  return report;
}

void write_counterfactual_tsv(const std::filesystem::path& path,
                              const DeltaReport& report) {
  TsvWriter w(path.string(), {"noteId", "cohort", "intercept_orig", "intercept_cf",
                              "delta", "status_orig", "status_cf"});
  for (const auto& d : report.notes)
    w.row({d.note_id, cohort_name(d.cohort), format_double(d.intercept_orig),
           format_double(d.intercept_cf), format_double(d.delta),
           status_name(d.status_orig), status_name(d.status_cf)});
}

void write_counterfactual_summary_tsv(const std::filesystem::path& path,
                                      const DeltaReport& report) {
  TsvWriter w(path.string(), {"cohort", "n", "mean_delta", "ci_low", "ci_high",
                              "would_have_survived", "would_have_vanished",
                              "dropped_notes"});
  for (const auto& s : report.cohorts)
    w.row({cohort_name(s.cohort), format_int(static_cast<std::int64_t>(s.n)),
           format_double(s.mean_delta), format_double(s.ci_low),
           format_double(s.ci_high),
           format_int(static_cast<std::int64_t>(report.would_have_survived)),
           format_int(static_cast<std::int64_t>(report.would_have_vanished)),
           format_int(static_cast<std::int64_t>(report.dropped.size()))});
}

}  // namespace notekit
