#include <doctest.h>

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "notekit/counterfactual.hpp"
#include "notekit/rating_matrix.hpp"
#include "notekit/scorer.hpp"
#include "notekit/tsv.hpp"
#include "oracles.hpp"

using namespace notekit;
using namespace testkit;

namespace {

NoteRaterRelation rel(const std::string& note, const std::string& rater,
                      RaterClass klass) {
  NoteRaterRelation r;
  r.note_id = note;
  r.relation.rater_id = rater;
  r.relation.klass = klass;
  return r;
}

StatusTimeline displayed_at(const std::string& note, EpochMs at,
                            bool disappeared = false) {
  StatusTimeline tl;
  tl.note_id = note;
  tl.entries.push_back({note, at - 100, NoteStatus::NeedsMoreRatings});
  tl.entries.push_back({note, at, NoteStatus::CurrentlyRatedHelpful});
  if (disappeared)
    tl.entries.push_back({note, at + 5000, NoteStatus::NeedsMoreRatings});
  tl.displayed = true;
  tl.disappeared = disappeared;
  return tl;
}

// Five raters rate h-notes helpful and n-notes not helpful everywhere; the
// mixed note splits them. Timestamps are unique and increasing.
std::vector<RatingEvent> block_stream() {
  std::vector<RatingEvent> events;
  EpochMs t = 1000;
  auto rater = [](int r) { return "r" + std::to_string(r); };
  for (const char* note : {"h1", "h2"})
    for (int r = 0; r < 10; ++r) events.push_back(ev(note, rater(r), t += 10, H));
  for (const char* note : {"n1", "n2"})
    for (int r = 0; r < 10; ++r) events.push_back(ev(note, rater(r), t += 10, N));
  for (int r = 0; r < 5; ++r) events.push_back(ev("a_mix", rater(r), t += 10, H));
  for (int r = 5; r < 10; ++r) events.push_back(ev("a_mix", rater(r), t += 10, N));
  return events;
}

ScorerConfig block_config() {
  ScorerConfig config;
  config.thresholds.helpful_min_intercept = 0.2;
  config.thresholds.not_helpful_max_intercept = -0.3;
  config.thresholds.min_raters = 5;
  return config;
}

const NoteDelta& find_note(const DeltaReport& report, const std::string& id) {
  auto it = std::find_if(report.notes.begin(), report.notes.end(),
                         [&](const NoteDelta& d) { return d.note_id == id; });
  REQUIRE(it != report.notes.end());
  return *it;
}

const CohortSummary& find_cohort(const DeltaReport& report, Cohort c) {
  auto it = std::find_if(report.cohorts.begin(), report.cohorts.end(),
                         [&](const CohortSummary& s) { return s.cohort == c; });
  REQUIRE(it != report.cohorts.end());
  return *it;
}

}  // namespace

TEST_SUITE_BEGIN("counterfactual");

TEST_CASE("relation index defaults to general") {
  RelationIndex empty;
  CHECK(empty.at("note", "rater") == RaterClass::General);

  std::vector<NoteRaterRelation> relations = {
      rel("n1", "alice", RaterClass::Dissimilar),
      rel("n1", "bob", RaterClass::Similar),
      rel("n2", "alice", RaterClass::Similar),
  };
  RelationIndex index(relations);
  CHECK(index.at("n1", "alice") == RaterClass::Dissimilar);
  CHECK(index.at("n1", "bob") == RaterClass::Similar);
  CHECK(index.at("n2", "alice") == RaterClass::Similar);
  CHECK(index.at("n1", "carol") == RaterClass::General);
  CHECK(index.at("n3", "alice") == RaterClass::General);
}

TEST_CASE("post-display scope drops excluded ratings from the display time on") {
  std::vector<RatingEvent> events = {
      ev("n1", "d1", 500, N),   // before display: kept
      ev("n1", "d1", 1000, N),  // at display: removed
      ev("n1", "d2", 1500, N),  // after display: removed
      ev("n1", "s1", 1600, H),  // similar, not excluded
      ev("n1", "g1", 2000, H),  // general
      ev("n2", "d1", 1700, N),  // never-displayed note keeps everything
  };
  std::vector<NoteRaterRelation> relations = {
      rel("n1", "d1", RaterClass::Dissimilar),
      rel("n1", "d2", RaterClass::Dissimilar),
      rel("n1", "s1", RaterClass::Similar),
      rel("n2", "d1", RaterClass::Dissimilar),
  };
  RelationIndex index(relations);
  std::vector<StatusTimeline> timelines = {displayed_at("n1", 1000)};

  ExclusionPolicy policy;
  policy.groups = {RaterClass::Dissimilar};

  ExclusionReport report;
  auto kept = apply_policy(events, index, timelines, policy, &report);

  REQUIRE(kept.size() == 4);
  CHECK(kept[0].created_at == 500);
  CHECK(kept[1].rater_id == "s1");
  CHECK(kept[2].rater_id == "g1");
  CHECK(kept[3].note_id == "n2");
  CHECK(report.removed_total == 2);
  CHECK(report.removed_by_group.at(RaterClass::Dissimilar) == 2);
  CHECK(report.removed_by_note.at("n1") == 2);
  CHECK(report.removed_by_note.count("n2") == 0);

  SUBCASE("all-ratings scope ignores display times") {
    policy.all_ratings = true;
    auto all = apply_policy(events, index, timelines, policy, &report);
    REQUIRE(all.size() == 2);
    CHECK(all[0].rater_id == "s1");
    CHECK(all[1].rater_id == "g1");
    CHECK(report.removed_total == 4);
    CHECK(report.removed_by_note.at("n2") == 1);
  }

  SUBCASE("an empty group set removes nothing") {
    policy.groups.clear();
    auto none = apply_policy(events, index, timelines, policy, &report);
    CHECK(none.size() == events.size());
    CHECK(report.removed_total == 0);
  }

  SUBCASE("filtering is idempotent") {
    auto once = apply_policy(events, index, timelines, policy);
    auto twice = apply_policy(once, index, timelines, policy);
    REQUIRE(once.size() == twice.size());
    for (std::size_t i = 0; i < once.size(); ++i) {
      CHECK(once[i].note_id == twice[i].note_id);
      CHECK(once[i].rater_id == twice[i].rater_id);
      CHECK(once[i].created_at == twice[i].created_at);
    }
  }

  SUBCASE("widening the excluded set only removes more") {
    auto narrow = apply_policy(events, index, timelines, policy);
    policy.groups.insert(RaterClass::Similar);
    auto wide = apply_policy(events, index, timelines, policy);
    CHECK(wide.size() < narrow.size());
    std::multiset<std::string> narrow_keys;
    for (const auto& e : narrow)
      narrow_keys.insert(e.note_id + "\t" + e.rater_id + "\t" +
                         std::to_string(e.created_at));
    for (const auto& e : wide)
      CHECK(narrow_keys.count(e.note_id + "\t" + e.rater_id + "\t" +
                              std::to_string(e.created_at)) == 1);
  }
}

TEST_CASE("excluding every class from all ratings is rejected") {
  ExclusionPolicy policy;
  policy.groups = {RaterClass::Similar, RaterClass::General, RaterClass::Dissimilar};
  policy.all_ratings = true;
  std::vector<RatingEvent> events = {ev("n1", "r1", 100, H)};
  RelationIndex index;
  std::vector<StatusTimeline> timelines;
  CHECK_THROWS_WITH_AS(apply_policy(events, index, timelines, policy),
                       "excluding every rater class from all ratings empties the matrix",
                       std::invalid_argument);
  policy.all_ratings = false;
  CHECK_NOTHROW(apply_policy(events, index, timelines, policy));
}

TEST_CASE("rescoring an unchanged stream yields exactly zero deltas") {
  auto events = block_stream();
  auto config = block_config();
  std::vector<StatusTimeline> timelines;
  auto report = rescore_diff(events, events, config, timelines);

  REQUIRE(report.notes.size() == 5);
  CHECK(report.dropped.empty());
  for (const auto& d : report.notes) {
    CHECK(d.delta == 0.0);
    CHECK(d.intercept_cf == d.intercept_orig);
    CHECK(d.status_cf == d.status_orig);
    CHECK(d.cohort == Cohort::NeverDisplayed);
  }
  CHECK(report.would_have_survived == 0);
  CHECK(report.would_have_vanished == 0);
  CHECK(find_cohort(report, Cohort::NeverDisplayed).n == 5);
  CHECK(find_cohort(report, Cohort::Disappeared).n == 0);
  CHECK(find_cohort(report, Cohort::Stable).n == 0);
}

TEST_CASE("baseline statuses on the block fixture are decisive") {
  auto events = block_stream();
  auto config = block_config();
  auto m = latest_rating_matrix(events);
  auto model = fit(m, config);
  auto counts = m.ratings_per_note();
  auto status_of = [&](const std::string& id) {
    auto row = model.note_row(id);
    REQUIRE(row);
    return assign_status(model, id, counts[static_cast<std::size_t>(*row)],
                         config.thresholds);
  };
  CHECK(status_of("h1") == NoteStatus::CurrentlyRatedHelpful);
  CHECK(status_of("h2") == NoteStatus::CurrentlyRatedHelpful);
  CHECK(status_of("n1") == NoteStatus::CurrentlyRatedNotHelpful);
  CHECK(status_of("n2") == NoteStatus::CurrentlyRatedNotHelpful);
  CHECK(status_of("a_mix") != NoteStatus::CurrentlyRatedHelpful);
}

TEST_CASE("rescoring tracks drops, flips, and cohorts") {
  auto events = block_stream();
  auto config = block_config();

  // Remove the five not-helpful ratings on the mixed note, six of the ten on
  // h1 (leaving four raters, below the minimum), and every rating on n2.
  std::vector<RatingEvent> filtered;
  int h1_removed = 0;
  for (const auto& e : events) {
    if (e.note_id == "a_mix" && e.level == HelpfulnessLevel::NotHelpful) continue;
    if (e.note_id == "n2") continue;
    if (e.note_id == "h1" && h1_removed < 6) {
      ++h1_removed;
      continue;
    }
    filtered.push_back(e);
  }

  std::vector<StatusTimeline> timelines = {
      displayed_at("h1", 2000, true),
      displayed_at("h2", 2000, false),
  };
  auto report = rescore_diff(events, filtered, config, timelines, 42, 400);

  REQUIRE(report.dropped == std::vector<NoteId>{"n2"});
  REQUIRE(report.notes.size() == 4);

  const auto& mixed = find_note(report, "a_mix");
  CHECK(mixed.status_orig != NoteStatus::CurrentlyRatedHelpful);
  CHECK(mixed.status_cf == NoteStatus::CurrentlyRatedHelpful);
  CHECK(mixed.delta > 0.0);
  CHECK(mixed.cohort == Cohort::NeverDisplayed);

  const auto& h1 = find_note(report, "h1");
  CHECK(h1.status_orig == NoteStatus::CurrentlyRatedHelpful);
  CHECK(h1.status_cf == NoteStatus::NeedsMoreRatings);
  CHECK(h1.cohort == Cohort::Disappeared);

  CHECK(find_note(report, "h2").cohort == Cohort::Stable);
  CHECK(report.would_have_survived == 1);
  CHECK(report.would_have_vanished == 1);

  // Cohort rows always appear in the same order with matched counts.
  REQUIRE(report.cohorts.size() == 3);
  CHECK(report.cohorts[0].cohort == Cohort::Disappeared);
  CHECK(report.cohorts[1].cohort == Cohort::Stable);
  CHECK(report.cohorts[2].cohort == Cohort::NeverDisplayed);
  CHECK(report.cohorts[0].n == 1);
  CHECK(report.cohorts[1].n == 1);
  CHECK(report.cohorts[2].n == 2);

  // A singleton cohort bootstraps to a degenerate interval at its mean.
  CHECK(report.cohorts[0].mean_delta == h1.delta);
  CHECK(report.cohorts[0].ci_low == doctest::Approx(h1.delta).epsilon(1e-12));
  CHECK(report.cohorts[0].ci_high == doctest::Approx(h1.delta).epsilon(1e-12));
  for (const auto& s : report.cohorts) {
    if (s.n < 2) continue;
    CHECK(s.ci_low <= s.mean_delta);
    CHECK(s.mean_delta <= s.ci_high);
  }

  SUBCASE("the bootstrap is seed-deterministic") {
    auto again = rescore_diff(events, filtered, config, timelines, 42, 400);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(again.cohorts[i].ci_low == report.cohorts[i].ci_low);
      CHECK(again.cohorts[i].ci_high == report.cohorts[i].ci_high);
      CHECK(again.cohorts[i].mean_delta == report.cohorts[i].mean_delta);
    }
  }

  SUBCASE("the tsv writers pin the published columns") {
    auto dir = fresh_dir("counterfactual_tsv");
    write_counterfactual_tsv(dir / "counterfactual.tsv", report);
    write_counterfactual_summary_tsv(dir / "summary.tsv", report);

    auto lines = [](const std::string& text) {
      std::vector<std::string> out;
      for (auto& line : split(text, '\n'))
        if (!line.empty()) out.push_back(line);
      return out;
    };
    auto note_lines = lines(read_file(dir / "counterfactual.tsv"));
    REQUIRE(note_lines.size() == 1 + report.notes.size());
    CHECK(note_lines[0] ==
          "noteId\tcohort\tintercept_orig\tintercept_cf\tdelta\tstatus_orig\t"
          "status_cf");
    auto first = split(note_lines[1], '\t');
    REQUIRE(first.size() == 7);
    CHECK(first[0] == report.notes[0].note_id);
    CHECK(parse_double(first[4]).value() == report.notes[0].delta);

    auto summary_lines = lines(read_file(dir / "summary.tsv"));
    REQUIRE(summary_lines.size() == 4);
    CHECK(summary_lines[0] ==
          "cohort\tn\tmean_delta\tci_low\tci_high\twould_have_survived\t"
          "would_have_vanished\tdropped_notes");
    auto row0 = split(summary_lines[1], '\t');
    REQUIRE(row0.size() == 8);
    CHECK(row0[0] == "disappeared");
    CHECK(split(summary_lines[2], '\t')[0] == "stable");
    CHECK(split(summary_lines[3], '\t')[0] == "never_displayed");
    CHECK(row0[5] == "1");
    CHECK(row0[6] == "1");
    CHECK(row0[7] == "1");
  }
}

TEST_CASE("rescoring rejects empty streams") {
  auto events = block_stream();
  std::vector<RatingEvent> empty;
  std::vector<StatusTimeline> timelines;
  ScorerConfig config;
  CHECK_THROWS_WITH_AS(rescore_diff(empty, events, config, timelines),
                       "rescore_diff requires non-empty event streams",
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(rescore_diff(events, empty, config, timelines),
                       "rescore_diff requires non-empty event streams",
                       std::invalid_argument);
}

TEST_SUITE_END();
