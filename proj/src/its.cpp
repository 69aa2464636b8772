#include "notekit/its.hpp"

#include "notekit/tsv.hpp"

namespace notekit {

std::string outcome_name(ItsOutcome outcome) {
  return outcome == ItsOutcome::Count ? "count" : "leaning";
}

DesignMatrix its_design(std::span<const PanelObservation> panel, ItsOutcome outcome) {
  DesignMatrix d;
  const auto n = static_cast<Eigen::Index>(panel.size());
  const bool count = outcome == ItsOutcome::Count;
  // The leaning model drops the intercept: note demeaning would zero it out.
  if (count) d.names = {"intercept", "T", "D", "DxT"};
  else d.names = {"T", "D", "DxT"};
  d.X.resize(n, static_cast<Eigen::Index>(d.names.size()));
  d.y.resize(n);
  d.cluster.resize(panel.size());
  d.group.resize(panel.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& obs = panel[static_cast<std::size_t>(i)];
    Eigen::Index j = 0;
    if (count) d.X(i, j++) = 1.0;
    d.X(i, j++) = static_cast<double>(obs.quarter);
    d.X(i, j++) = obs.post_display ? 1.0 : 0.0;
    d.X(i, j++) = static_cast<double>(obs.quarters_since);
    d.y[i] = count ? static_cast<double>(obs.rating_count) : obs.rating_leaning;
    d.cluster[static_cast<std::size_t>(i)] = obs.note_id;
    d.group[static_cast<std::size_t>(i)] = obs.note_id;
  }
  return d;
}

ItsReport its_report(std::span<const PanelObservation> panel, ItsOutcome outcome,
                     const std::string& subgroup) {
  if (panel.empty()) throw EstimationError("empty panel for subgroup '" + subgroup + "'");
  DesignMatrix design = its_design(panel, outcome);
  ItsReport report;
  report.outcome = outcome;
  report.subgroup = subgroup;
  report.fit = outcome == ItsOutcome::Count ? fit_poisson(design) : fit_ols(design);

  for (const auto& name : design.names) {
    auto j = report.fit.term(name);
    if (j < 0) continue;
    ItsTerm t;
    t.term = name;
    t.estimate = report.fit.coefficients[j];
    t.clustered_se = report.fit.se[j];
    t.z = report.fit.z[j];
    t.p = report.fit.p[j];
    t.ci_low = report.fit.ci_low[j];
    t.ci_high = report.fit.ci_high[j];
    if (outcome == ItsOutcome::Count) {
      t.percent = percent_effect(t.estimate);
      t.percent_ci_low = percent_effect(t.ci_low);
      t.percent_ci_high = percent_effect(t.ci_high);
    }
    report.terms.push_back(t);
  }
  return report;
}

void write_its_report_tsv(const std::string& path, const ItsReport& report) {
  std::vector<std::string> header = {"term",   "estimate", "clustered_se",
                                     "z",      "p",        "ci_low",
                                     "ci_high", "n_obs",    "n_clusters"};
  const bool count = report.outcome == ItsOutcome::Count;
  if (count) {
    header.push_back("percent");
    header.push_back("percent_ci_low");
    header.push_back("percent_ci_high");
  }
  TsvWriter w(path, header);
  for (const auto& t : report.terms) {
    std::vector<std::string> row = {
        t.term,
        format_double(t.estimate),
        format_double(t.clustered_se),
        format_double(t.z),
        format_double(t.p),
        format_double(t.ci_low),
        format_double(t.ci_high),
        format_int(static_cast<std::int64_t>(report.fit.n_obs)),
        format_int(static_cast<std::int64_t>(report.fit.n_clusters))};
    if (count) {
      row.push_back(format_double(t.percent.value_or(0.0)));
      row.push_back(format_double(t.percent_ci_low.value_or(0.0)));
      row.push_back(format_double(t.percent_ci_high.value_or(0.0)));
    }
    w.row(row);
  }
}

}  // namespace notekit
