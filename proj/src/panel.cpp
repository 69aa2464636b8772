#include "notekit/panel.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "notekit/tsv.hpp"

namespace notekit {

namespace {

// Floor division so pre-display offsets land in the right quarter.
int quarter_of(EpochMs ts, EpochMs display) {
  EpochMs delta = ts - display;
  EpochMs q = delta / kQuarterMs;
  if (delta % kQuarterMs != 0 && delta < 0) --q;
  return static_cast<int>(q);
}

}  // namespace

PanelBuildResult build_its_panel(std::span<const RatingEvent> events,
                                 const std::unordered_map<NoteId, EpochMs>& display_time,
                                 PanelWindow window) {
  struct Cellstats {
    std::int64_t count = 0;
    std::int64_t leaning = 0;
  };
  std::map<NoteId, std::vector<Cellstats>> per_note;
  std::set<NoteId> missing;

  for (const auto& e : events) {
    auto it = display_time.find(e.note_id);
    if (it == display_time.end()) {
      missing.insert(e.note_id);
      continue;
    }
    int q = quarter_of(e.created_at, it->second);
    if (q < window.first || q > window.last) continue;
    auto [slot, inserted] = per_note.try_emplace(e.note_id);
    if (inserted) slot->second.assign(static_cast<std::size_t>(window.width()), {});
    auto& cell = slot->second[static_cast<std::size_t>(q - window.first)];
    ++cell.count;
    if (e.level == HelpfulnessLevel::Helpful) ++cell.leaning;
    if (e.level == HelpfulnessLevel::NotHelpful) --cell.leaning;
  }

  // Notes with a display time but no in-window events still get a full panel.
  for (const auto& [note, _] : display_time)
    per_note.try_emplace(note).first->second.resize(
        static_cast<std::size_t>(window.width()));

  PanelBuildResult result;
  result.observations.reserve(per_note.size() * static_cast<std::size_t>(window.width()));
  for (const auto& [note, cells] : per_note) {
    for (int t = window.first; t <= window.last; ++t) {
      const auto& cell = cells[static_cast<std::size_t>(t - window.first)];
      PanelObservation obs;
      obs.note_id = note;
      obs.quarter = t;
      obs.post_display = t >= 0 ? 1 : 0;
      obs.quarters_since = t >= 0 ? t : 0;
      obs.rating_count = cell.count;
      obs.rating_leaning = cell.leaning;
      result.observations.push_back(std::move(obs));
    }
  }
  result.skipped.assign(missing.begin(), missing.end());
  return result;
}

void write_panel_tsv(const std::string& path,
                     std::span<const PanelObservation> observations) {
  TsvWriter w(path, {"noteId", "quarter", "post_display", "quarters_since",
                     "rating_count", "rating_leaning"});
  for (const auto& obs : observations)
    w.row({obs.note_id, format_int(obs.quarter), format_int(obs.post_display),
           format_int(obs.quarters_since), format_int(obs.rating_count),
           format_int(obs.rating_leaning)});
}

std::vector<PanelObservation> read_panel_tsv(const std::string& path) {
  TsvReader reader(path);
  std::size_t c_note = reader.require_column("noteId");
  std::size_t c_quarter = reader.require_column("quarter");
  std::size_t c_post = reader.require_column("post_display");
  std::size_t c_since = reader.require_column("quarters_since");
  std::size_t c_count = reader.require_column("rating_count");
  std::size_t c_leaning = reader.require_column("rating_leaning");
  std::size_t width =
      std::max({c_note, c_quarter, c_post, c_since, c_count, c_leaning}) + 1;

  std::vector<PanelObservation> out;
  std::vector<std::string> fields;
  while (reader.next_row(fields)) {
    if (fields.size() < width) throw IngestError("malformed panel row");
    auto cell = [&](std::size_t c) {
      auto v = parse_int(fields[c]);
      if (!v) throw IngestError("malformed panel integer: " + fields[c]);
      return *v;
    };
    PanelObservation obs;
    obs.note_id = fields[c_note];
    obs.quarter = static_cast<int>(cell(c_quarter));
    obs.post_display = static_cast<int>(cell(c_post));
    obs.quarters_since = static_cast<int>(cell(c_since));
    obs.rating_count = cell(c_count);
    obs.rating_leaning = cell(c_leaning);
    out.push_back(std::move(obs));
  }
  return out;
}

}  // namespace notekit
