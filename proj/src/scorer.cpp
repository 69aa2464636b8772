#include "notekit/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "notekit/rng.hpp"
#include "notekit/tsv.hpp"

namespace notekit {

std::optional<int> ScoringModel::note_row(const NoteId& id) const {
  auto it = note_index.find(id);
  if (it == note_index.end()) return std::nullopt;
  return it->second;
}

std::optional<int> ScoringModel::rater_row(const RaterId& id) const {
  auto it = rater_index.find(id);
  if (it == rater_index.end()) return std::nullopt;
  return it->second;
}

Prediction predict(const ScoringModel& model, const RaterId& rater, const NoteId& note) {
  Prediction p;
  p.value = model.mu;
  auto u = model.rater_row(rater);
  auto n = model.note_row(note);
  if (u) p.value += model.rater_intercepts[*u];
  if (n) p.value += model.note_intercepts[*n];
  if (u && n) p.value += model.rater_factors.row(*u).dot(model.note_factors.row(*n));
  p.cold_start = !u || !n;
  return p;
}

double loss(const ScoringModel& model, const RatingMatrix& matrix,
            const ScorerConfig& config) {
  double residual_sq = 0.0;
  for (const auto& c : matrix.cells) {
    double fitted = model.mu + model.rater_intercepts[c.rater] +
                    model.note_intercepts[c.note] +
                    model.rater_factors.row(c.rater).dot(model.note_factors.row(c.note));
    double e = c.value - fitted;
    residual_sq += e * e;
  }
  double intercept_pen = model.rater_intercepts.squaredNorm() +
                         model.note_intercepts.squaredNorm() + model.mu * model.mu;
  double factor_pen =
      model.rater_factors.squaredNorm() + model.note_factors.squaredNorm();
  return residual_sq + config.lambda_intercept * intercept_pen +
         config.lambda_factor * factor_pen;
}

namespace {

std::size_t parameter_count(const ScoringModel& m) {
  return 1 + m.rater_ids.size() + m.note_ids.size() +
         m.rater_factors.size() + m.note_factors.size();
}

struct Gradients {
  double mu = 0.0;
  Eigen::VectorXd rater_intercepts;
  Eigen::VectorXd note_intercepts;
  Eigen::MatrixXd rater_factors;
  Eigen::MatrixXd note_factors;
};

// Loss and full gradient in one pass over the cells.
double evaluate(const ScoringModel& model, const RatingMatrix& matrix,
                const ScorerConfig& config, Gradients& g) {
  const std::size_t raters = model.rater_ids.size();
  const std::size_t notes = model.note_ids.size();
  g.rater_intercepts.setZero(static_cast<Eigen::Index>(raters));
  g.note_intercepts.setZero(static_cast<Eigen::Index>(notes));
  g.rater_factors.setZero(static_cast<Eigen::Index>(raters), model.factor_dim());
  g.note_factors.setZero(static_cast<Eigen::Index>(notes), model.factor_dim());
  g.mu = 0.0;

  double residual_sq = 0.0;
  for (const auto& c : matrix.cells) {
    double fitted = model.mu + model.rater_intercepts[c.rater] +
                    model.note_intercepts[c.note] +
                    model.rater_factors.row(c.rater).dot(model.note_factors.row(c.note));
    double e = c.value - fitted;
    residual_sq += e * e;
    g.mu -= 2.0 * e;
    g.rater_intercepts[c.rater] -= 2.0 * e;
    g.note_intercepts[c.note] -= 2.0 * e;
    g.rater_factors.row(c.rater) -= 2.0 * e * model.note_factors.row(c.note);
    g.note_factors.row(c.note) -= 2.0 * e * model.rater_factors.row(c.rater);
  }
  g.mu += 2.0 * config.lambda_intercept * model.mu;
  g.rater_intercepts += 2.0 * config.lambda_intercept * model.rater_intercepts;
  g.note_intercepts += 2.0 * config.lambda_intercept * model.note_intercepts;
  g.rater_factors += 2.0 * config.lambda_factor * model.rater_factors;
  g.note_factors += 2.0 * config.lambda_factor * model.note_factors;

  return residual_sq +
         config.lambda_intercept * (model.rater_intercepts.squaredNorm() +
                                    model.note_intercepts.squaredNorm() +
                                    model.mu * model.mu) +
         config.lambda_factor * (model.rater_factors.squaredNorm() +
                                 model.note_factors.squaredNorm());
}

// Gradient steps are scaled per parameter by how many cells touch it, so
// sparsely rated notes and raters move at the same pace as dense ones.
void apply_step(ScoringModel& m, const Gradients& g, const Eigen::VectorXd& rater_scale,
                const Eigen::VectorXd& note_scale, double total_scale, double lr) {
  m.mu -= lr * g.mu * total_scale;
  m.rater_intercepts -= lr * g.rater_intercepts.cwiseProduct(rater_scale);
  m.note_intercepts -= lr * g.note_intercepts.cwiseProduct(note_scale);
  m.rater_factors -= lr * rater_scale.asDiagonal() * g.rater_factors;
  m.note_factors -= lr * note_scale.asDiagonal() * g.note_factors;
}

}  // namespace

Eigen::VectorXd pack_parameters(const ScoringModel& model) {
  Eigen::VectorXd packed(static_cast<Eigen::Index>(parameter_count(model)));
  Eigen::Index at = 0;
  packed[at++] = model.mu;
  for (Eigen::Index i = 0; i < model.rater_intercepts.size(); ++i)
    packed[at++] = model.rater_intercepts[i];
  for (Eigen::Index i = 0; i < model.note_intercepts.size(); ++i)
    packed[at++] = model.note_intercepts[i];
  for (Eigen::Index r = 0; r < model.rater_factors.rows(); ++r)
    for (Eigen::Index k = 0; k < model.rater_factors.cols(); ++k)
      packed[at++] = model.rater_factors(r, k);
  for (Eigen::Index r = 0; r < model.note_factors.rows(); ++r)
    for (Eigen::Index k = 0; k < model.note_factors.cols(); ++k)
      packed[at++] = model.note_factors(r, k);
  return packed;
}

void unpack_parameters(const Eigen::VectorXd& packed, ScoringModel& model) {
  Eigen::Index at = 0;
  model.mu = packed[at++];
  for (Eigen::Index i = 0; i < model.rater_intercepts.size(); ++i)
    model.rater_intercepts[i] = packed[at++];
  for (Eigen::Index i = 0; i < model.note_intercepts.size(); ++i)
    model.note_intercepts[i] = packed[at++];
  for (Eigen::Index r = 0; r < model.rater_factors.rows(); ++r)
    for (Eigen::Index k = 0; k < model.rater_factors.cols(); ++k)
      model.rater_factors(r, k) = packed[at++];
  for (Eigen::Index r = 0; r < model.note_factors.rows(); ++r)
    for (Eigen::Index k = 0; k < model.note_factors.cols(); ++k)
      model.note_factors(r, k) = packed[at++];
}

Eigen::VectorXd loss_gradient(const ScoringModel& model, const RatingMatrix& matrix,
                              const ScorerConfig& config) {
  Gradients g;
  evaluate(model, matrix, config, g);
  ScoringModel view = model;  // reuse the packing layout
  view.mu = g.mu;
  view.rater_intercepts = g.rater_intercepts;
  view.note_intercepts = g.note_intercepts;
  view.rater_factors = g.rater_factors;
  view.note_factors = g.note_factors;
  return pack_parameters(view);
}

ScoringModel fit(const RatingMatrix& matrix, const ScorerConfig& config) {
  if (matrix.empty()) throw TrainingError("cannot fit on an empty rating matrix");

  ScoringModel model;
  model.note_ids = matrix.note_ids;
  model.rater_ids = matrix.rater_ids;
  model.note_index = matrix.note_index;
  model.rater_index = matrix.rater_index;
  const auto raters = static_cast<Eigen::Index>(matrix.raters());
  const auto notes = static_cast<Eigen::Index>(matrix.notes());
  model.rater_intercepts.resize(raters);
  model.note_intercepts.resize(notes);
  model.rater_factors.resize(raters, config.factor_dim);
  model.note_factors.resize(notes, config.factor_dim);

  Rng rng(config.seed);
  auto init = [&rng]() { return rng.uniform(-0.01, 0.01); };
  model.mu = init();
  for (Eigen::Index i = 0; i < raters; ++i) model.rater_intercepts[i] = init();
  for (Eigen::Index i = 0; i < notes; ++i) model.note_intercepts[i] = init();
  for (Eigen::Index r = 0; r < raters; ++r)
    for (int k = 0; k < config.factor_dim; ++k) model.rater_factors(r, k) = init();
  for (Eigen::Index r = 0; r < notes; ++r)
    for (int k = 0; k < config.factor_dim; ++k) model.note_factors(r, k) = init();

  // Per-parameter inverse cell counts for step scaling.
  Eigen::VectorXd rater_scale = Eigen::VectorXd::Zero(raters);
  Eigen::VectorXd note_scale = Eigen::VectorXd::Zero(notes);
  for (const auto& c : matrix.cells) {
    rater_scale[c.rater] += 1.0;
    note_scale[c.note] += 1.0;
  }
  rater_scale = rater_scale.cwiseInverse();
  note_scale = note_scale.cwiseInverse();
  const double total_scale = 1.0 / static_cast<double>(matrix.cells.size());

  Gradients grad;
  double current = evaluate(model, matrix, config, grad);
  if (!std::isfinite(current)) throw TrainingError("non-finite loss at initialization");

  double lr = config.learning_rate;
  model.epoch_losses.reserve(static_cast<std::size_t>(config.max_epochs));
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    ScoringModel candidate = model;
    apply_step(candidate, grad, rater_scale, note_scale, total_scale, lr);
    double next = loss(candidate, matrix, config);
    int halvings = 0;
    while ((!std::isfinite(next) || next > current) && halvings < 60) {
      lr *= 0.5;
      ++halvings;
      candidate = model;
      apply_step(candidate, grad, rater_scale, note_scale, total_scale, lr);
      next = loss(candidate, matrix, config);
    }
    if (!std::isfinite(next))
      throw TrainingError("non-finite loss during training (learning rate too high)");
    if (next > current) break;  // no descent even at the smallest step

    model = std::move(candidate);
    model.epoch_losses.push_back(next);
    bool converged = (current - next) <= config.convergence_tol * std::max(1.0, std::abs(current));
    current = next;
    if (converged) break;
    current = evaluate(model, matrix, config, grad);
  }
  model.final_loss = current;
  return model;
}

NoteStatus assign_status(const ScoringModel& model, const NoteId& note,
                         int rater_count, const StatusThresholds& thresholds) {
  auto row = model.note_row(note);
  if (!row) return NoteStatus::NeedsMoreRatings;
  if (rater_count < thresholds.min_raters) return NoteStatus::NeedsMoreRatings;
  double intercept = model.note_intercepts[*row];
  if (intercept >= thresholds.helpful_min_intercept)
    return NoteStatus::CurrentlyRatedHelpful;
  if (intercept <= thresholds.not_helpful_max_intercept)
    return NoteStatus::CurrentlyRatedNotHelpful;
  return NoteStatus::NeedsMoreRatings;
}

std::optional<EpochMs> StatusTimeline::display_time() const {
  for (const auto& e : entries)
    if (e.status == NoteStatus::CurrentlyRatedHelpful) return e.at;
  return std::nullopt;
}

NoteStatus StatusTimeline::final_status() const {
  return entries.empty() ? NoteStatus::NeedsMoreRatings : entries.back().status;
}

std::vector<StatusTimeline> replay(std::span<const RatingEvent> events_by_time,
                                   const ScorerConfig& config,
                                   EpochMs rescore_interval) {
  if (rescore_interval <= 0)
    throw std::invalid_argument("rescore_interval must be positive");
  for (std::size_t i = 1; i < events_by_time.size(); ++i)
    if (events_by_time[i].created_at < events_by_time[i - 1].created_at)
      throw std::invalid_argument("replay expects events sorted by created_at");
  if (events_by_time.empty()) return {};

  struct State {
    StatusTimeline timeline;
    NoteStatus current = NoteStatus::NeedsMoreRatings;
  };
  std::map<NoteId, State> states;
  // Notes are born Needs More Ratings; anchor that just before the first
  // rating so changed statuses at a boundary stay strictly later.
  for (const auto& e : events_by_time) {
    auto [it, inserted] = states.try_emplace(e.note_id);
    if (inserted) {
      it->second.timeline.note_id = e.note_id;
      it->second.timeline.entries.push_back(
          {e.note_id, e.created_at - 1, NoteStatus::NeedsMoreRatings});
    }
  }

  const EpochMs t0 = events_by_time.front().created_at;
  const EpochMs t_end = events_by_time.back().created_at;
  std::size_t consumed = 0;
  std::vector<RatingEvent> so_far;
  so_far.reserve(events_by_time.size());

  for (EpochMs boundary = t0 + rescore_interval;; boundary += rescore_interval) {
    while (consumed < events_by_time.size() &&
           events_by_time[consumed].created_at <= boundary)
      so_far.push_back(events_by_time[consumed++]);
    if (!so_far.empty()) {
      RatingMatrix matrix = latest_rating_matrix(so_far);
      ScoringModel model = fit(matrix, config);
      std::vector<int> counts = matrix.ratings_per_note();
      for (std::size_t n = 0; n < matrix.notes(); ++n) {
        const NoteId& id = matrix.note_ids[n];
        NoteStatus status =
            assign_status(model, id, counts[n], config.thresholds);
        State& state = states.at(id);
        if (status != state.current) {
          state.timeline.entries.push_back({id, boundary, status});
          state.current = status;
        }
      }
    }
    if (boundary >= t_end) break;
  }

  std::vector<StatusTimeline> timelines;
  timelines.reserve(states.size());
  for (auto& [id, state] : states) {
    auto& tl = state.timeline;
    for (std::size_t i = 0; i < tl.entries.size(); ++i) {
      if (tl.entries[i].status == NoteStatus::CurrentlyRatedHelpful) {
        tl.displayed = true;
        if (i + 1 < tl.entries.size()) tl.disappeared = true;
      }
    }
    timelines.push_back(std::move(tl));
  }
  return timelines;
}

Histogram make_histogram(std::span<const double> values, int bins) {
  Histogram h;
  h.counts.assign(static_cast<std::size_t>(std::max(1, bins)), 0);
  if (values.empty()) return h;
  h.lo = *std::min_element(values.begin(), values.end());
  h.hi = *std::max_element(values.begin(), values.end());
  const double width = h.hi - h.lo;
  for (double v : values) {
    std::size_t bin = 0;
    if (width > 0) {
      bin = static_cast<std::size_t>((v - h.lo) / width * static_cast<double>(h.counts.size()));
      if (bin >= h.counts.size()) bin = h.counts.size() - 1;
    }
    ++h.counts[bin];
  }
  return h;
}

ScorerDiagnostics diagnostics(const ScoringModel& model,
                              std::span<const StatusTimeline> timelines,
                              const std::unordered_map<NoteId, NoteStatus>& reference) {
  ScorerDiagnostics d;
  std::vector<double> intercepts(model.note_intercepts.data(),
                                 model.note_intercepts.data() + model.note_intercepts.size());
  std::vector<double> factors(model.note_factors.data(),
                              model.note_factors.data() + model.note_factors.size());
  d.intercepts = make_histogram(intercepts, 20);
  d.factors = make_histogram(factors, 20);

  std::size_t matches = 0;
  for (const auto& tl : timelines) {
    auto it = reference.find(tl.note_id);
    if (it == reference.end()) {
      ++d.missing_reference;
      continue;
    }
    ++d.compared;
    if (tl.final_status() == it->second) ++matches;
  }
  d.status_match_rate =
      d.compared == 0 ? 1.0 : static_cast<double>(matches) / static_cast<double>(d.compared);
  return d;
}

void write_scores_tsv(const std::string& path, const ScoringModel& model,
                      const RatingMatrix& matrix, const StatusThresholds& thresholds) {
  TsvWriter w(path, {"noteId", "intercept", "factor", "status"});
  std::vector<int> counts = matrix.ratings_per_note();
  for (std::size_t n = 0; n < model.note_ids.size(); ++n) {
    const NoteId& id = model.note_ids[n];
    auto mrow = matrix.note_index.find(id);
    int count = mrow == matrix.note_index.end()
                    ? 0
                    : counts[static_cast<std::size_t>(mrow->second)];
    w.row({id, format_double(model.note_intercepts[static_cast<Eigen::Index>(n)]),
           format_double(model.note_factors(static_cast<Eigen::Index>(n), 0)),
           status_name(assign_status(model, id, count, thresholds))});
  }
}

void write_timelines_tsv(const std::string& path,
                         std::span<const StatusTimeline> timelines) {
  std::vector<StatusEntry> entries;
  for (const auto& tl : timelines)
    entries.insert(entries.end(), tl.entries.begin(), tl.entries.end());
  std::sort(entries.begin(), entries.end(), [](const StatusEntry& a, const StatusEntry& b) {
    if (a.note_id != b.note_id) return a.note_id < b.note_id;
    return a.at < b.at;
  });
  write_status_tsv(path, entries);
}

std::vector<StatusTimeline> timelines_from_entries(std::span<const StatusEntry> entries) {
  std::map<NoteId, StatusTimeline> by_note;
  for (const auto& e : entries) {
    auto [it, inserted] = by_note.try_emplace(e.note_id);
    if (inserted) it->second.note_id = e.note_id;
    it->second.entries.push_back(e);
  }
  std::vector<StatusTimeline> out;
  out.reserve(by_note.size());
  for (auto& [id, tl] : by_note) {
    std::sort(tl.entries.begin(), tl.entries.end(),
              [](const StatusEntry& a, const StatusEntry& b) { return a.at < b.at; });
    for (std::size_t i = 0; i < tl.entries.size(); ++i)
      if (tl.entries[i].status == NoteStatus::CurrentlyRatedHelpful) {
        tl.displayed = true;
        if (i + 1 < tl.entries.size()) tl.disappeared = true;
      }
    out.push_back(std::move(tl));
  }
  return out;
}

}  // namespace notekit
