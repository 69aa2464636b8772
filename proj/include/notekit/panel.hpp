#pragma once

#include <span>
#include <unordered_map>
#include <vector>

#include "notekit/types.hpp"

namespace notekit {

// Observation window in quarters relative to display; both ends inclusive.
struct PanelWindow {
  int first = -16;
  int last = 16;

  int width() const { return last - first + 1; }
};

struct PanelBuildResult {
  std::vector<PanelObservation> observations;
  std::vector<NoteId> skipped;  // notes present in events but without a display time
};

// One observation per (note, quarter) over the window, anchored at the note's
// display time: quarter T covers [display + T*15min, display + (T+1)*15min).
// Quarters without events are emitted with zero count and leaning.
// SomewhatHelpful events count toward volume but contribute 0 to leaning.
PanelBuildResult build_its_panel(std::span<const RatingEvent> events,
                                 const std::unordered_map<NoteId, EpochMs>& display_time,
                                 PanelWindow window = {});

void write_panel_tsv(const std::string& path,
                     std::span<const PanelObservation> observations);
std::vector<PanelObservation> read_panel_tsv(const std::string& path);

}  // namespace notekit
