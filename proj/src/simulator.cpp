#include "notekit/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "notekit/rng.hpp"

namespace notekit {

namespace {

// Latent-cosine bands used to form per-note group pools.
constexpr double kSimilarPoolMin = 0.25;
constexpr double kDissimilarPoolMax = -0.25;

std::string padded(const char* prefix, int i, int width) {
  std::string digits = std::to_string(i);
  std::string out = prefix;
  out.append(static_cast<std::size_t>(std::max(0, width - static_cast<int>(digits.size()))),
             '0');
  out += digits;
  return out;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

void validate(const SimConfig& config) {
  if (config.n_raters <= 0 || config.n_notes <= 0)
    throw std::invalid_argument("population sizes must be positive");
  if (config.cluster_mix.empty())
    throw std::invalid_argument("cluster_mix must be non-empty");
  double mix = 0.0;
  for (double m : config.cluster_mix) {
    if (m < 0) throw std::invalid_argument("cluster_mix proportions must be >= 0");
    mix += m;
  }
  if (std::abs(mix - 1.0) > 1e-9)
    throw std::invalid_argument("cluster_mix must sum to 1");
  double shares = config.similar_share + config.general_share + config.dissimilar_share;
  if (std::abs(shares - 1.0) > 1e-9)
    throw std::invalid_argument("group shares must sum to 1");
  if (config.display_jump <= 0)
    throw std::invalid_argument("display_jump must be positive");
  if (config.horizon < 17)
    throw std::invalid_argument("horizon must cover the 17-quarter display window");
  if (config.latent_dim < 1) throw std::invalid_argument("latent_dim must be >= 1");
  if (config.displayed_fraction < 0 || config.displayed_fraction > 1)
    throw std::invalid_argument("displayed_fraction must be in [0, 1]");
  if (config.somewhat_prob < 0 || config.somewhat_prob > 1)
    throw std::invalid_argument("somewhat_prob must be in [0, 1]");
}

std::string sim_group_name(SimGroup g) {
  switch (g) {
    case SimGroup::Similar: return "SIMILAR";
    case SimGroup::General: return "GENERAL";
    case SimGroup::Dissimilar: return "DISSIMILAR";
    default: return "ATTACKER";
  }
}

Population generate_population(const SimConfig& config) {
  validate(config);
  Rng rng(config.seed);
  const int k = static_cast<int>(config.cluster_mix.size());
  const int d = config.latent_dim;

  // Two clusters sit antipodally on the first axis; further clusters get
  // random unit centroids.
  Eigen::MatrixXd centroids = Eigen::MatrixXd::Zero(k, d);
  centroids(0, 0) = config.cluster_sep;
  if (k > 1) centroids(1, 0) = -config.cluster_sep;
  for (int c = 2; c < k; ++c) {
    Eigen::VectorXd v(d);
    for (int j = 0; j < d; ++j) v[j] = rng.normal();
    double n = v.norm();
    centroids.row(c) = (n > 0 ? v / n * config.cluster_sep : v).transpose();
  }

  Population pop;
  pop.rater_ids.reserve(static_cast<std::size_t>(config.n_raters));
  pop.cluster.reserve(static_cast<std::size_t>(config.n_raters));
  pop.latent.resize(config.n_raters, d);
  std::vector<double> cum(config.cluster_mix.size());
  std::partial_sum(config.cluster_mix.begin(), config.cluster_mix.end(), cum.begin());
  for (int r = 0; r < config.n_raters; ++r) {
    pop.rater_ids.push_back(padded("rater", r, 6));
    double u = rng.uniform();
    int c = static_cast<int>(std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
    if (c >= k) c = k - 1;
    pop.cluster.push_back(c);
    for (int j = 0; j < d; ++j)
      pop.latent(r, j) = centroids(c, j) + config.latent_noise * rng.normal();
  }
  return pop;
}

std::vector<NoteRecord> generate_notes(const Population& population,
                                       const SimConfig& config, GroundTruth& truth) {
  Rng rng(config.seed + 1);
  static const std::vector<std::string> kDomains = {
      "civicfacts.org",   "dailyledger.com", "openwire.net",  "statwatch.org",
      "metroherald.com",  "labreview.org",   "chainpost.com", "plainrecord.net"};

  std::vector<NoteRecord> notes;
  notes.reserve(static_cast<std::size_t>(config.n_notes));
  truth.note_quality.resize(static_cast<std::size_t>(config.n_notes));
  truth.display_quarter.assign(static_cast<std::size_t>(config.n_notes), -1);
  truth.display_time.assign(static_cast<std::size_t>(config.n_notes), 0);
  truth.attacked.assign(static_cast<std::size_t>(config.n_notes), 0);

  for (int n = 0; n < config.n_notes; ++n) {
    NoteRecord note;
    note.note_id = padded("note", n, 6);
    note.writer_id = population.rater_ids[static_cast<std::size_t>(
        rng.uniform_int(config.n_raters))];
    note.post_id = padded("post", n, 6);
    note.created_at = config.stream_start;
    int n_domains = rng.uniform_int(3);
    for (int j = 0; j < n_domains; ++j)
      note.cited_domains.push_back(
          kDomains[static_cast<std::size_t>(rng.uniform_int(
              static_cast<int>(kDomains.size())))]);
    truth.note_quality[static_cast<std::size_t>(n)] = rng.normal(0.0, config.quality_sd);
    notes.push_back(std::move(note));
  }

  // Display the top displayed_fraction notes by planted quality, each at a
  // uniform quarter leaving the full +/-16 window inside the horizon.
  std::vector<int> order(static_cast<std::size_t>(config.n_notes));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return truth.note_quality[static_cast<std::size_t>(a)] >
           truth.note_quality[static_cast<std::size_t>(b)];
  });
  const int displayed =
      static_cast<int>(std::lround(config.displayed_fraction * config.n_notes));
  const int lo = 16;
  const int hi = std::max(lo, config.horizon - 17);
  for (int i = 0; i < displayed && i < config.n_notes; ++i) {
    int n = order[static_cast<std::size_t>(i)];
    int q = lo + rng.uniform_int(hi - lo + 1);
    truth.display_quarter[static_cast<std::size_t>(n)] = q;
    truth.display_time[static_cast<std::size_t>(n)] =
        config.stream_start + static_cast<EpochMs>(q) * kQuarterMs;
  }
  return notes;
}

std::vector<LabeledEvent> generate_ratings(const Population& population,
                                           const std::vector<NoteRecord>& notes,
                                           const GroundTruth& truth,
                                           const SimConfig& config) {
  Rng rng(config.seed + 2);
  std::vector<LabeledEvent> stream;

  std::vector<int> pool_similar, pool_general, pool_dissimilar, pool_any;
  for (std::size_t n = 0; n < notes.size(); ++n) {
    const auto& note = notes[n];
    auto writer_it = std::find(population.rater_ids.begin(), population.rater_ids.end(),
                               note.writer_id);
    const int writer = static_cast<int>(writer_it - population.rater_ids.begin());
    const Eigen::VectorXd wvec = population.latent.row(writer);
    const double wnorm = wvec.norm();

    pool_similar.clear();
    pool_general.clear();
    pool_dissimilar.clear();
    pool_any.clear();
    for (int r = 0; r < config.n_raters; ++r) {
      if (r == writer) continue;
      pool_any.push_back(r);
      double rn = population.latent.row(r).norm();
      if (wnorm == 0.0 || rn == 0.0) {
        pool_general.push_back(r);
        continue;
      }
      double cos = population.latent.row(r).dot(wvec) / (rn * wnorm);
      if (cos >= kSimilarPoolMin) pool_similar.push_back(r);
      else if (cos <= kDissimilarPoolMax) pool_dissimilar.push_back(r);
      else pool_general.push_back(r);
    }

    const int dq = truth.display_quarter[n];
    const double quality = truth.note_quality[n];
    for (int q = 0; q < config.horizon; ++q) {
      const bool post = dq >= 0 && q >= dq;
      double rate = config.base_rate;
      if (post)
        rate *= config.display_jump * std::pow(config.sustained_growth, q - dq);
      int count = rng.poisson(rate);
      for (int i = 0; i < count; ++i) {
        double u = rng.uniform();
        SimGroup group;
        const std::vector<int>* pool;
        if (u < config.similar_share) {
          group = SimGroup::Similar;
          pool = &pool_similar;
        } else if (u < config.similar_share + config.general_share) {
          group = SimGroup::General;
          pool = &pool_general;
        } else {
          group = SimGroup::Dissimilar;
          pool = &pool_dissimilar;
        }
        if (pool->empty()) pool = &pool_any;
        if (pool->empty()) continue;
        int rater = (*pool)[static_cast<std::size_t>(
            rng.uniform_int(static_cast<int>(pool->size())))];

        LabeledEvent le;
        le.group = group;
        le.event.note_id = note.note_id;
        le.event.rater_id = population.rater_ids[static_cast<std::size_t>(rater)];
        le.event.created_at = config.stream_start +
                              static_cast<EpochMs>(q) * kQuarterMs +
                              static_cast<EpochMs>(rng.uniform() *
                                                   static_cast<double>(kQuarterMs));
        if (rng.uniform() < config.somewhat_prob) {
          le.event.level = HelpfulnessLevel::SomewhatHelpful;
        } else {
          double rn = population.latent.row(rater).norm();
          double cos = (wnorm == 0.0 || rn == 0.0)
                           ? 0.0
                           : population.latent.row(rater).dot(wvec) / (rn * wnorm);
          double shift = 0.0;
          if (post) {
            if (group == SimGroup::Similar) shift = config.leaning_shift.similar;
            else if (group == SimGroup::General) shift = config.leaning_shift.general;
            else shift = config.leaning_shift.dissimilar;
          }
          double p = sigmoid(config.cos_weight * cos +
                             config.quality_weight * quality + shift);
          le.event.level = rng.uniform() < p ? HelpfulnessLevel::Helpful
                                             : HelpfulnessLevel::NotHelpful;
        }
        stream.push_back(std::move(le));
      }
    }
  }
  return stream;
}

void inject_attack(std::vector<LabeledEvent>& stream, const Population& population,
                   const std::vector<NoteRecord>& notes, GroundTruth& truth,
                   const SimConfig& config) {
  if (config.attack.fraction <= 0.0) return;
  Rng rng(config.seed + 3);
  const int attacker_cluster = static_cast<int>(config.cluster_mix.size()) - 1;

  std::vector<int> cohort_source;
  for (int r = 0; r < config.n_raters; ++r)
    if (population.cluster[static_cast<std::size_t>(r)] == attacker_cluster)
      cohort_source.push_back(r);
  rng.shuffle(cohort_source);
  if (cohort_source.size() > static_cast<std::size_t>(config.attack.cohort_size))
    cohort_source.resize(static_cast<std::size_t>(config.attack.cohort_size));
  if (cohort_source.empty()) return;

  std::unordered_map<std::string, int> cluster_of_writer;
  for (std::size_t n = 0; n < notes.size(); ++n) {
    auto it = std::find(population.rater_ids.begin(), population.rater_ids.end(),
                        notes[n].writer_id);
    cluster_of_writer[notes[n].writer_id] =
        population.cluster[static_cast<std::size_t>(it - population.rater_ids.begin())];
  }

  std::vector<int> eligible;
  for (std::size_t n = 0; n < notes.size(); ++n)
    if (truth.display_quarter[n] >= 0 &&
        cluster_of_writer.at(notes[n].writer_id) != attacker_cluster)
      eligible.push_back(static_cast<int>(n));
  rng.shuffle(eligible);
  auto n_attacked = static_cast<std::size_t>(
      std::lround(config.attack.fraction * static_cast<double>(eligible.size())));
  eligible.resize(std::min(eligible.size(), n_attacked));

  // (note, rater) pairs already in the organic stream; an attacker rating a
  // note twice would collapse into one matrix cell and blunt the wave.
  std::unordered_set<std::string> seen;
  seen.reserve(stream.size() * 2);
  for (const auto& le : stream)
    seen.insert(le.event.note_id + "\t" + le.event.rater_id);

  std::vector<int> wave = cohort_source;
  for (int n : eligible) {
    truth.attacked[static_cast<std::size_t>(n)] = 1;
    int w = truth.display_quarter[static_cast<std::size_t>(n)] +
            config.attack.wave_start_quarter;
    if (w >= config.horizon) w = config.horizon - 1;
    rng.shuffle(wave);
    int added = 0;
    for (int r : wave) {
      if (added >= config.attack.attackers_per_wave) break;
      const auto& rater = population.rater_ids[static_cast<std::size_t>(r)];
      std::string key = notes[static_cast<std::size_t>(n)].note_id + "\t" + rater;
      if (seen.count(key)) continue;
      seen.insert(std::move(key));
      LabeledEvent le;
      le.group = SimGroup::Attacker;
      le.event.note_id = notes[static_cast<std::size_t>(n)].note_id;
      le.event.rater_id = rater;
      le.event.created_at = config.stream_start +
                            static_cast<EpochMs>(w) * kQuarterMs +
                            static_cast<EpochMs>(rng.uniform() *
                                                 static_cast<double>(kQuarterMs));
      le.event.level = HelpfulnessLevel::NotHelpful;
      stream.push_back(std::move(le));
      ++added;
    }
  }
}

std::vector<PostRecord> generate_posts(const Population& population,
                                       const std::vector<NoteRecord>& notes,
                                       const GroundTruth& truth, const SimConfig& config) {
  Rng rng(config.seed + 4);
  std::unordered_map<std::string, int> cluster_of_writer;
  for (const auto& note : notes) {
    auto it = std::find(population.rater_ids.begin(), population.rater_ids.end(),
                        note.writer_id);
    cluster_of_writer[note.writer_id] =
        population.cluster[static_cast<std::size_t>(it - population.rater_ids.begin())];
  }

  std::vector<PostRecord> posts;
  posts.reserve(notes.size());
  for (std::size_t n = 0; n < notes.size(); ++n) {
    const auto& note = notes[n];
    PostRecord post;
    post.post_id = note.post_id;
    post.author_id = padded("poster", static_cast<int>(n), 6);
    post.topic_politics = rng.uniform() < 0.35;
    post.topic_science = rng.uniform() < 0.2;
    post.topic_health = rng.uniform() < 0.2;
    post.topic_economy = rng.uniform() < 0.25;
    post.sentiment_pos = rng.uniform();
    post.sentiment_neg = rng.uniform();
    post.has_media = rng.uniform() < 0.5;
    post.verified = rng.uniform() < 0.3;
    post.account_age_days = rng.uniform(30.0, 4000.0);
    post.followers = rng.uniform_int(200000);
    post.followees = rng.uniform_int(5000);
    double mis = 0.5 - 0.15 * truth.note_quality[n] + 0.2 * rng.normal();
    post.misinfo_exposure = std::clamp(mis, 0.0, 1.0);
    double lean = cluster_of_writer.at(note.writer_id) == 0
                      ? rng.uniform(-1.0, 0.2)
                      : rng.uniform(-0.2, 1.0);
    post.partisan_score = std::clamp(lean, -1.0, 1.0);
    posts.push_back(std::move(post));
  }
  return posts;
}

SimResult simulate(const SimConfig& config) {
  SimResult result;
  result.population = generate_population(config);
  result.notes = generate_notes(result.population, config, result.truth);
  std::vector<LabeledEvent> stream =
      generate_ratings(result.population, result.notes, result.truth, config);
  inject_attack(stream, result.population, result.notes, result.truth, config);
  result.posts = generate_posts(result.population, result.notes, result.truth, config);

  std::stable_sort(stream.begin(), stream.end(),
                   [](const LabeledEvent& a, const LabeledEvent& b) {
                     if (a.event.created_at != b.event.created_at)
                       return a.event.created_at < b.event.created_at;
                     if (a.event.note_id != b.event.note_id)
                       return a.event.note_id < b.event.note_id;
                     return a.event.rater_id < b.event.rater_id;
                   });
  result.ratings.reserve(stream.size());
  result.truth.rating_group.reserve(stream.size());
  for (auto& le : stream) {
    result.ratings.push_back(std::move(le.event));
    result.truth.rating_group.push_back(le.group);
  }
  return result;
}

}  // namespace notekit
