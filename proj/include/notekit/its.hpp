#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "notekit/glm.hpp"
#include "notekit/types.hpp"

namespace notekit {

enum class ItsOutcome { Count, Leaning };

std::string outcome_name(ItsOutcome outcome);

struct ItsTerm {
  std::string term;
  double estimate = 0.0;
  double clustered_se = 0.0;
  double z = 0.0;
  double p = 1.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::optional<double> percent;  // exp(estimate)-1, count model only
  std::optional<double> percent_ci_low;
  std::optional<double> percent_ci_high;
};

struct ItsReport {
  ItsOutcome outcome = ItsOutcome::Count;
  std::string subgroup;
  FitResult fit;
  std::vector<ItsTerm> terms;  // intercept (count only), T, D, DxT
};

// Builds the segmented-regression design from a display-anchored panel and
// fits it: Poisson with a note fixed-effect block for counts, OLS with note
// demeaning for leaning. T is the quarter index, D the post-display
// indicator, DxT quarters since display; errors cluster by note.
ItsReport its_report(std::span<const PanelObservation> panel, ItsOutcome outcome,
                     const std::string& subgroup);

DesignMatrix its_design(std::span<const PanelObservation> panel, ItsOutcome outcome);

// term, estimate, clustered_se, z, p, ci_low, ci_high, n_obs, n_clusters,
// plus percent-effect companions for count models.
void write_its_report_tsv(const std::string& path, const ItsReport& report);

}  // namespace notekit
