#include "notekit/embedder.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>
#include <unordered_map>

#include "notekit/rng.hpp"
#include "notekit/tsv.hpp"

namespace notekit {

std::string rater_class_name(RaterClass c) {
  switch (c) {
    case RaterClass::Similar: return "SIMILAR";
    case RaterClass::Dissimilar: return "DISSIMILAR";
    default: return "GENERAL";
  }
}

RaterClass parse_rater_class(const std::string& text) {
  if (text == "SIMILAR") return RaterClass::Similar;
  if (text == "GENERAL") return RaterClass::General;
  if (text == "DISSIMILAR") return RaterClass::Dissimilar;
  throw IngestError("unknown rater class: " + text);
}

RatingMatrix filter_dataset(std::span<const RatingEvent> events,
                            const EmbedderConfig& config, FilterReport* report) {
  RatingMatrix m = latest_rating_matrix(events);
  std::vector<char> note_alive(m.notes(), 1);
  std::vector<char> rater_alive(m.raters(), 1);
  FilterReport local;
  bool removed = true;
  while (removed) {
    removed = false;
    ++local.rounds;
    std::vector<int> note_count(m.notes(), 0);
    std::vector<int> rater_count(m.raters(), 0);
    for (const auto& c : m.cells) {
      if (!note_alive[static_cast<std::size_t>(c.note)] ||
          !rater_alive[static_cast<std::size_t>(c.rater)])
        continue;
      ++note_count[static_cast<std::size_t>(c.note)];
      ++rater_count[static_cast<std::size_t>(c.rater)];
    }
    for (std::size_t n = 0; n < m.notes(); ++n)
      if (note_alive[n] && note_count[n] < config.min_ratings_per_note) {
        note_alive[n] = 0;
        ++local.notes_removed;
        removed = true;
      }
    for (std::size_t r = 0; r < m.raters(); ++r)
      if (rater_alive[r] && rater_count[r] < config.min_ratings_per_rater) {
        rater_alive[r] = 0;
        ++local.raters_removed;
        removed = true;
      }
  }
  if (report) *report = local;

  RatingMatrix out;
  for (std::size_t n = 0; n < m.notes(); ++n)
    if (note_alive[n]) {
      out.note_index[m.note_ids[n]] = static_cast<int>(out.note_ids.size());
      out.note_ids.push_back(m.note_ids[n]);
    }
  for (std::size_t r = 0; r < m.raters(); ++r)
    if (rater_alive[r]) {
      out.rater_index[m.rater_ids[r]] = static_cast<int>(out.rater_ids.size());
      out.rater_ids.push_back(m.rater_ids[r]);
    }
  for (const auto& c : m.cells) {
    if (!note_alive[static_cast<std::size_t>(c.note)] ||
        !rater_alive[static_cast<std::size_t>(c.rater)])
      continue;
    out.cells.push_back({out.note_index.at(m.note_ids[static_cast<std::size_t>(c.note)]),
                         out.rater_index.at(m.rater_ids[static_cast<std::size_t>(c.rater)]),
                         c.value});
  }
  if (out.cells.empty())
    throw FilterError("minimum-rating filters removed the entire dataset");
  return out;
}

ScoringModel fit_embeddings(const RatingMatrix& matrix, const EmbedderConfig& config) {
  if (matrix.empty()) throw TrainingError("cannot fit embeddings on an empty matrix");

  ScoringModel model;
  model.note_ids = matrix.note_ids;
  model.rater_ids = matrix.rater_ids;
  model.note_index = matrix.note_index;
  model.rater_index = matrix.rater_index;
  const auto raters = static_cast<Eigen::Index>(matrix.raters());
  const auto notes = static_cast<Eigen::Index>(matrix.notes());
  const int dim = config.factor_dim;
  model.rater_intercepts.resize(raters);
  model.note_intercepts.resize(notes);
  model.rater_factors.resize(raters, dim);
  model.note_factors.resize(notes, dim);

  Rng rng(config.seed);
  auto init = [&rng]() { return rng.uniform(-0.01, 0.01); };
  model.mu = init();
  for (Eigen::Index i = 0; i < raters; ++i) model.rater_intercepts[i] = init();
  for (Eigen::Index i = 0; i < notes; ++i) model.note_intercepts[i] = init();
  for (Eigen::Index r = 0; r < raters; ++r)
    for (int k = 0; k < dim; ++k) model.rater_factors(r, k) = init();
  for (Eigen::Index r = 0; r < notes; ++r)
    for (int k = 0; k < dim; ++k) model.note_factors(r, k) = init();

  const std::size_t total = matrix.cells.size();
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0);

  // Batch gradient scratch; only touched rows are cleared between batches.
  Eigen::VectorXd g_iu = Eigen::VectorXd::Zero(raters);
  Eigen::VectorXd g_in = Eigen::VectorXd::Zero(notes);
  Eigen::MatrixXd g_fu = Eigen::MatrixXd::Zero(raters, dim);
  Eigen::MatrixXd g_fn = Eigen::MatrixXd::Zero(notes, dim);
  std::vector<char> rater_touched(matrix.raters(), 0);
  std::vector<char> note_touched(matrix.notes(), 0);
  std::vector<int> touched_raters, touched_notes;
  touched_raters.reserve(static_cast<std::size_t>(config.batch_size));
  touched_notes.reserve(static_cast<std::size_t>(config.batch_size));

  // Adam keeps per-parameter step sizes near the learning rate regardless of
  // problem scale, which is what lets a fixed 20-epoch budget reach the loss
  // plateau on matrices from a few hundred cells up to millions. Moments of
  // untouched rows are left stale between batches (lazy sparse updates), and
  // the rate is cosine-annealed to zero so the final epochs settle.
  const double lr0 = config.learning_rate;
  const int batch = std::max(1, config.batch_size);
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kAdamEps = 1e-8;
  double m_mu = 0.0, v_mu = 0.0;
  Eigen::VectorXd m_iu = Eigen::VectorXd::Zero(raters);
  Eigen::VectorXd v_iu = Eigen::VectorXd::Zero(raters);
  Eigen::VectorXd m_in = Eigen::VectorXd::Zero(notes);
  Eigen::VectorXd v_in = Eigen::VectorXd::Zero(notes);
  Eigen::MatrixXd m_fu = Eigen::MatrixXd::Zero(raters, dim);
  Eigen::MatrixXd v_fu = Eigen::MatrixXd::Zero(raters, dim);
  Eigen::MatrixXd m_fn = Eigen::MatrixXd::Zero(notes, dim);
  Eigen::MatrixXd v_fn = Eigen::MatrixXd::Zero(notes, dim);
  long long step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    // Annealed to zero by the final epoch so the reported tail is settled.
    const double lr =
        lr0 * 0.5 *
        (1.0 + std::cos(std::numbers::pi * static_cast<double>(epoch) /
                        static_cast<double>(std::max(1, config.epochs - 1))));
    rng.shuffle(order);
    for (std::size_t start = 0; start < total; start += static_cast<std::size_t>(batch)) {
      const std::size_t stop = std::min(total, start + static_cast<std::size_t>(batch));
      double g_mu = 0.0;
      for (std::size_t b = start; b < stop; ++b) {
        const auto& c = matrix.cells[order[b]];
        double e = c.value - (model.mu + model.rater_intercepts[c.rater] +
                              model.note_intercepts[c.note] +
                              model.rater_factors.row(c.rater).dot(
                                  model.note_factors.row(c.note)));
        g_mu -= 2.0 * e;
        g_iu[c.rater] -= 2.0 * e;
        g_in[c.note] -= 2.0 * e;
        g_fu.row(c.rater) -= 2.0 * e * model.note_factors.row(c.note);
        g_fn.row(c.note) -= 2.0 * e * model.rater_factors.row(c.rater);
        if (!rater_touched[static_cast<std::size_t>(c.rater)]) {
          rater_touched[static_cast<std::size_t>(c.rater)] = 1;
          touched_raters.push_back(c.rater);
        }
        if (!note_touched[static_cast<std::size_t>(c.note)]) {
          note_touched[static_cast<std::size_t>(c.note)] = 1;
          touched_notes.push_back(c.note);
        }
      }
      const double inv = 1.0 / static_cast<double>(stop - start);
      ++step;
      const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      auto adam = [&](double g, double& m, double& v, double& p) {
        m = kBeta1 * m + (1.0 - kBeta1) * g;
        v = kBeta2 * v + (1.0 - kBeta2) * g * g;
        p -= lr * (m / bc1) / (std::sqrt(v / bc2) + kAdamEps);
      };
      adam(g_mu * inv, m_mu, v_mu, model.mu);
      for (int r : touched_raters) {
        adam(g_iu[r] * inv, m_iu[r], v_iu[r], model.rater_intercepts[r]);
        for (int k = 0; k < dim; ++k)
          adam(g_fu(r, k) * inv, m_fu(r, k), v_fu(r, k), model.rater_factors(r, k));
        g_iu[r] = 0.0;
        g_fu.row(r).setZero();
        rater_touched[static_cast<std::size_t>(r)] = 0;
      }
      for (int n : touched_notes) {
        adam(g_in[n] * inv, m_in[n], v_in[n], model.note_intercepts[n]);
        for (int k = 0; k < dim; ++k)
          adam(g_fn(n, k) * inv, m_fn(n, k), v_fn(n, k), model.note_factors(n, k));
        g_in[n] = 0.0;
        g_fn.row(n).setZero();
        note_touched[static_cast<std::size_t>(n)] = 0;
      }
      touched_raters.clear();
      touched_notes.clear();
    }

    double sse = 0.0;
    for (const auto& c : matrix.cells) {
      double e = c.value - (model.mu + model.rater_intercepts[c.rater] +
                            model.note_intercepts[c.note] +
                            model.rater_factors.row(c.rater).dot(
                                model.note_factors.row(c.note)));
      sse += e * e;
    }
    double mse = sse / static_cast<double>(total);
    if (!std::isfinite(mse))
      throw TrainingError("non-finite embedding loss at epoch " +
                          std::to_string(epoch) + " (learning rate too high)");
    model.epoch_losses.push_back(mse);
  }
  model.final_loss = model.epoch_losses.empty() ? 0.0 : model.epoch_losses.back();
  return model;
}

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double na = a.norm();
  double nb = b.norm();
  if (na == 0.0 || nb == 0.0)
    throw std::domain_error("similarity undefined for a zero vector");
  return a.dot(b) / (na * nb);
}

ClassificationQuality classification_quality(const ScoringModel& model,
                                             const RatingMatrix& matrix) {
  // Confusion counts for the two classes: index 1 = helpful (value >= 0.5).
  std::size_t tp[2] = {0, 0}, fp[2] = {0, 0}, fn[2] = {0, 0}, support[2] = {0, 0};
  for (const auto& c : matrix.cells) {
    double fitted = model.mu + model.rater_intercepts[c.rater] +
                    model.note_intercepts[c.note] +
                    model.rater_factors.row(c.rater).dot(model.note_factors.row(c.note));
    int truth = c.value >= 0.5 ? 1 : 0;
    int pred = fitted >= 0.5 ? 1 : 0;
    ++support[truth];
    if (pred == truth) {
      ++tp[truth];
    } else {
      ++fp[pred];
      ++fn[truth];
    }
  }
  ClassificationQuality q;
  q.n = matrix.cells.size();
  if (q.n == 0) return q;
  for (int c = 0; c < 2; ++c) {
    double denom_p = static_cast<double>(tp[c] + fp[c]);
    double denom_r = static_cast<double>(tp[c] + fn[c]);
    double prec = denom_p > 0 ? static_cast<double>(tp[c]) / denom_p : 0.0;
    double rec = denom_r > 0 ? static_cast<double>(tp[c]) / denom_r : 0.0;
    double f1 = prec + rec > 0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
    double weight = static_cast<double>(support[c]) / static_cast<double>(q.n);
    q.weighted_precision += weight * prec;
    q.weighted_recall += weight * rec;
    q.weighted_f1 += weight * f1;
  }
  return q;
}

namespace {

struct RunningStats {
  double sum = 0.0;
  double sumsq = 0.0;
  std::size_t n = 0;
  void add(double v) {
    sum += v;
    sumsq += v * v;
    ++n;
  }
  double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
  double sd() const {
    if (n < 2) return 0.0;
    double m = mean();
    double var = (sumsq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1);
    return var > 0 ? std::sqrt(var) : 0.0;
  }
};

std::uint64_t pair_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

}  // namespace

CopairStats copair_distributions(const RatingMatrix& matrix,
                                 const ScoringModel& embeddings,
                                 const EmbedderConfig& config) {
  // Embedding row and factor norm per matrix rater; raters the embedding
  // does not know (or with zero-norm factors) cannot form pairs.
  const std::size_t raters = matrix.raters();
  std::vector<int> row(raters, -1);
  std::vector<double> norm(raters, 0.0);
  for (std::size_t r = 0; r < raters; ++r) {
    if (auto er = embeddings.rater_row(matrix.rater_ids[r])) {
      double n = embeddings.rater_factors.row(*er).norm();
      if (n > 0) {
        row[r] = *er;
        norm[r] = n;
      }
    }
  }

  // Cells are sorted by note, so each note is one contiguous run.
  std::unordered_map<std::uint64_t, int> shared;
  shared.reserve(matrix.cells.size() * 4);
  std::vector<std::pair<int, double>> run;  // rater, value
  auto each_run = [&](auto&& body) {
    std::size_t i = 0;
    while (i < matrix.cells.size()) {
      int note = matrix.cells[i].note;
      run.clear();
      while (i < matrix.cells.size() && matrix.cells[i].note == note) {
        if (row[static_cast<std::size_t>(matrix.cells[i].rater)] >= 0)
          run.push_back({matrix.cells[i].rater, matrix.cells[i].value});
        ++i;
      }
      body(run);
    }
  };
  each_run([&](const std::vector<std::pair<int, double>>& r) {
    for (std::size_t a = 0; a < r.size(); ++a)
      for (std::size_t b = a + 1; b < r.size(); ++b)
        ++shared[pair_key(r[a].first, r[b].first)];
  });

  std::unordered_map<std::uint64_t, double> pair_cos;
  pair_cos.reserve(shared.size());
  std::vector<double> pooled;
  for (const auto& [key, count] : shared) {
    if (count < config.min_corated_notes) continue;
    int a = static_cast<int>(key >> 32);
    int b = static_cast<int>(key & 0xffffffffULL);
    double c = embeddings.rater_factors.row(row[static_cast<std::size_t>(a)])
                   .dot(embeddings.rater_factors.row(row[static_cast<std::size_t>(b)])) /
               (norm[static_cast<std::size_t>(a)] * norm[static_cast<std::size_t>(b)]);
    pair_cos.emplace(key, c);
    pooled.push_back(c);
  }

  CopairStats stats;
  stats.pair_count = pair_cos.size();
  RunningStats same, opposite;
  each_run([&](const std::vector<std::pair<int, double>>& r) {
    for (std::size_t a = 0; a < r.size(); ++a)
      for (std::size_t b = a + 1; b < r.size(); ++b) {
        auto it = pair_cos.find(pair_key(r[a].first, r[b].first));
        if (it == pair_cos.end()) continue;
        double va = r[a].second;
        double vb = r[b].second;
        if (va == 0.5 || vb == 0.5) continue;
        if (va == vb) same.add(it->second);
        else opposite.add(it->second);
      }
  });
  stats.same_mean = same.mean();
  stats.same_std = same.sd();
  stats.same_count = same.n;
  stats.opposite_mean = opposite.mean();
  stats.opposite_std = opposite.sd();
  stats.opposite_count = opposite.n;
  std::sort(pooled.begin(), pooled.end());
  stats.pooled = make_histogram(pooled, 40);
  return stats;
}

std::vector<RaterRelation> classify_relations(const NoteRecord& note,
                                              std::span<const RaterId> raters,
                                              const ScoringModel& embeddings,
                                              const EmbedderConfig& config) {
  auto writer_row = embeddings.rater_row(note.writer_id);
  double writer_norm = 0.0;
  if (writer_row) {
    writer_norm = embeddings.rater_factors.row(*writer_row).norm();
    if (writer_norm == 0.0) writer_row.reset();
  }

  std::vector<RaterRelation> out;
  out.reserve(raters.size());
  for (const auto& rater : raters) {
    RaterRelation rel;
    rel.writer_id = note.writer_id;
    rel.rater_id = rater;
    auto rr = embeddings.rater_row(rater);
    double rn = 0.0;
    if (rr) {
      rn = embeddings.rater_factors.row(*rr).norm();
      if (rn == 0.0) rr.reset();
    }
    if (!writer_row || !rr) {
      rel.missing_embedding = true;
    } else {
      rel.cosine = embeddings.rater_factors.row(*writer_row)
                       .dot(embeddings.rater_factors.row(*rr)) /
                   (writer_norm * rn);
      if (rel.cosine > config.similar_threshold) rel.klass = RaterClass::Similar;
      else if (rel.cosine < config.dissimilar_threshold) rel.klass = RaterClass::Dissimilar;
    }
    out.push_back(std::move(rel));
  }
  return out;
}

NoteProjection project_note_factors(const ScoringModel& embeddings,
                                    const ScoringModel* reference) {
  const Eigen::Index n = embeddings.note_factors.rows();
  const Eigen::Index d = embeddings.note_factors.cols();
  if (n < 2) throw std::invalid_argument("projection needs at least 2 notes");

  NoteProjection out;
  out.note_ids = embeddings.note_ids;
  Eigen::MatrixXd centered = embeddings.note_factors;
  centered.rowwise() -= embeddings.note_factors.colwise().mean();
  Eigen::MatrixXd cov = centered.transpose() * centered /
                        static_cast<double>(n - 1);

  double scale = cov.diagonal().maxCoeff();
  if (!(scale > 1e-14)) {
    out.projection = Eigen::VectorXd::Zero(n);
    out.component = Eigen::VectorXd::Zero(d);
    out.degenerate = true;
    return out;
  }

  Eigen::Index start;
  cov.diagonal().maxCoeff(&start);
  Eigen::VectorXd v = cov.col(start);
  if (v.norm() == 0.0) v = Eigen::VectorXd::Unit(d, start);
  v.normalize();
  for (int iter = 0; iter < 100000; ++iter) {
    Eigen::VectorXd next = cov * v;
    double nn = next.norm();
    if (nn == 0.0) break;
    next /= nn;
    double delta = std::min((next - v).norm(), (next + v).norm());
    v = next;
    if (delta < 1e-8) break;
  }
  out.component = v;
  out.projection = centered * v;

  if (reference) {
    double align = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (auto r = reference->note_row(embeddings.note_ids[static_cast<std::size_t>(i)]))
        align += out.projection[i] * reference->note_factors(*r, 0);
    if (align < 0) {
      out.component = -out.component;
      out.projection = -out.projection;
    }
  }
  return out;
}

namespace {

constexpr char kMagic[4] = {'N', 'K', 'E', 'B'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(value));
}

template <typename T>
T get(std::ifstream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(value));
  if (!is) throw IngestError("truncated embeddings file");
  return value;
}

void put_string(std::ofstream& os, const std::string& s) {
  put<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::ifstream& is) {
  auto len = get<std::uint32_t>(is);
  std::string s(len, '\0');
  is.read(s.data(), len);
  if (!is) throw IngestError("truncated embeddings file");
  return s;
}

}  // namespace

void write_embeddings(const std::filesystem::path& path, const ScoringModel& model) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IngestError("cannot open for writing: " + path.string());
  os.write(kMagic, 4);
  put<std::uint32_t>(os, kVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(model.factor_dim()));
  put<std::uint64_t>(os, model.rater_ids.size());
  put<std::uint64_t>(os, model.note_ids.size());
  put<double>(os, model.mu);
  for (std::size_t r = 0; r < model.rater_ids.size(); ++r) {
    put_string(os, model.rater_ids[r]);
    put<double>(os, model.rater_intercepts[static_cast<Eigen::Index>(r)]);
    for (Eigen::Index k = 0; k < model.rater_factors.cols(); ++k)
      put<double>(os, model.rater_factors(static_cast<Eigen::Index>(r), k));
  }
  for (std::size_t n = 0; n < model.note_ids.size(); ++n) {
    put_string(os, model.note_ids[n]);
    put<double>(os, model.note_intercepts[static_cast<Eigen::Index>(n)]);
    for (Eigen::Index k = 0; k < model.note_factors.cols(); ++k)
      put<double>(os, model.note_factors(static_cast<Eigen::Index>(n), k));
  }
  if (!os) throw IngestError("write failed: " + path.string());
}

ScoringModel read_embeddings(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IngestError("cannot open: " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw IngestError("not an embeddings file: " + path.string());
  auto version = get<std::uint32_t>(is);
  if (version != kVersion)
    throw IngestError("unsupported embeddings version " + std::to_string(version));
  auto dim = static_cast<Eigen::Index>(get<std::uint32_t>(is));
  auto raters = static_cast<Eigen::Index>(get<std::uint64_t>(is));
  auto notes = static_cast<Eigen::Index>(get<std::uint64_t>(is));

  ScoringModel model;
  model.mu = get<double>(is);
  model.rater_intercepts.resize(raters);
  model.rater_factors.resize(raters, dim);
  model.note_intercepts.resize(notes);
  model.note_factors.resize(notes, dim);
  for (Eigen::Index r = 0; r < raters; ++r) {
    std::string id = get_string(is);
    model.rater_index[id] = static_cast<int>(r);
    model.rater_ids.push_back(std::move(id));
    model.rater_intercepts[r] = get<double>(is);
    for (Eigen::Index k = 0; k < dim; ++k) model.rater_factors(r, k) = get<double>(is);
  }
  for (Eigen::Index n = 0; n < notes; ++n) {
    std::string id = get_string(is);
    model.note_index[id] = static_cast<int>(n);
    model.note_ids.push_back(std::move(id));
    model.note_intercepts[n] = get<double>(is);
    for (Eigen::Index k = 0; k < dim; ++k) model.note_factors(n, k) = get<double>(is);
  }
  return model;
}

void write_relations_tsv(const std::filesystem::path& path,
                         std::span<const NoteRaterRelation> relations) {
  TsvWriter w(path.string(), {"noteId", "raterId", "cosine", "class"});
  for (const auto& r : relations)
    w.row({r.note_id, r.relation.rater_id, format_double(r.relation.cosine),
           rater_class_name(r.relation.klass)});
}

std::vector<NoteRaterRelation> read_relations_tsv(const std::filesystem::path& path) {
  TsvReader reader(path.string());
  std::size_t c_note = reader.require_column("noteId");
  std::size_t c_rater = reader.require_column("raterId");
  std::size_t c_cos = reader.require_column("cosine");
  std::size_t c_class = reader.require_column("class");
  std::size_t width = std::max({c_note, c_rater, c_cos, c_class}) + 1;
  std::vector<NoteRaterRelation> out;
  std::vector<std::string> fields;
  while (reader.next_row(fields)) {
    if (fields.size() < width) throw IngestError("malformed relations row");
    NoteRaterRelation r;
    r.note_id = fields[c_note];
    r.relation.rater_id = fields[c_rater];
    auto cos = parse_double(fields[c_cos]);
    if (!cos) throw IngestError("malformed cosine: " + fields[c_cos]);
    r.relation.cosine = *cos;
    r.relation.klass = parse_rater_class(fields[c_class]);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace notekit
