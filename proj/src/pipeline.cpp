#include "notekit/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>

#include "notekit/config.hpp"
#include "notekit/counterfactual.hpp"
#include "notekit/domain_score.hpp"
#include "notekit/embedder.hpp"
#include "notekit/its.hpp"
#include "notekit/manifest.hpp"
#include "notekit/panel.hpp"
#include "notekit/scorer.hpp"
#include "notekit/simulator.hpp"
#include "notekit/tsv.hpp"

namespace notekit {

namespace {

namespace fs = std::filesystem;

struct RunContext {
  RunOptions options;
  Config config;
  fs::path dir;
  fs::path data;
  RunManifest manifest;
};

// One writer per run directory; the lock outlives all stages of an invocation.
class LockFile {
 public:
  LockFile(const fs::path& dir, bool force) : path_(dir / ".lock") {
    if (force) ::unlink(path_.c_str());
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0)
      throw StageError("run directory is locked by another process (" +
                       path_.string() + "); use --force to break a stale lock");
  }
  ~LockFile() {
    if (fd_ >= 0) {
      ::close(fd_);
      ::unlink(path_.c_str());
    }
  }
  LockFile(const LockFile&) = delete;
  LockFile& operator=(const LockFile&) = delete;

 private:
  fs::path path_;
  int fd_ = -1;
};

std::string rel(const RunContext& ctx, const fs::path& p) {
  return fs::relative(p, ctx.dir).string();
}

ArtifactRecord artifact(const RunContext& ctx, const fs::path& path, std::int64_t rows) {
  return {rel(ctx, path), file_digest(path), rows};
}

void require_file(const RunContext& ctx, const fs::path& path, const char* producer) {
  if (!fs::exists(path))
    throw StageError("missing artifact " + rel(ctx, path) + "; run " + producer +
                     " first");
}

std::vector<RatingEvent> load_sorted_ratings(const RunContext& ctx) {
  auto events = read_ratings_tsv({(ctx.data / "ratings.tsv").string()});
  std::stable_sort(events.begin(), events.end(),
                   [](const RatingEvent& a, const RatingEvent& b) {
                     if (a.created_at != b.created_at) return a.created_at < b.created_at;
                     if (a.note_id != b.note_id) return a.note_id < b.note_id;
                     return a.rater_id < b.rater_id;
                   });
  return events;
}

std::vector<StatusTimeline> load_timelines(const RunContext& ctx) {
  auto entries = read_status_tsv({(ctx.dir / "timelines.tsv").string()});
  return timelines_from_entries(entries);
}

// -------- stages --------

StageRecord stage_simulate(RunContext& ctx) {
  SimConfig sim_config = ctx.config.sim();
  SimResult result = simulate(sim_config);
  fs::create_directories(ctx.data);

  write_notes_tsv((ctx.data / "notes.tsv").string(), result.notes);
  write_ratings_tsv((ctx.data / "ratings.tsv").string(), result.ratings);
  write_posts_tsv((ctx.data / "posts.tsv").string(), result.posts);

  {
    TsvWriter w((ctx.data / "ground_truth.tsv").string(), {"ratingId", "groupLabel"});
    for (std::size_t i = 0; i < result.truth.rating_group.size(); ++i)
      w.row({format_int(static_cast<std::int64_t>(i)),
             sim_group_name(result.truth.rating_group[i])});
  }
  {
    TsvWriter w((ctx.data / "ground_truth_notes.tsv").string(),
                {"noteId", "displayQuarter", "attacked"});
    for (std::size_t n = 0; n < result.notes.size(); ++n)
      w.row({result.notes[n].note_id,
             format_int(result.truth.display_quarter[n]),
             format_int(result.truth.attacked[n] ? 1 : 0)});
  }

  // Deterministic lookup tables over the domains the notes actually cite.
  std::set<std::string> domains;
  for (const auto& n : result.notes)
    domains.insert(n.cited_domains.begin(), n.cited_domains.end());
  static const double kBias[] = {-1.0, -0.5, 0.0, 0.5, 1.0};
  static const double kQuality[] = {0.2, 0.35, 0.5, 0.65, 0.8, 0.95};
  ScoreLookup bias, quality;
  std::size_t i = 0;
  for (const auto& d : domains) {
    bias[d] = kBias[i % 5];
    quality[d] = kQuality[i % 6];
    ++i;
  }
  write_score_tsv((ctx.data / "bias.tsv").string(), bias);
  write_score_tsv((ctx.data / "quality.tsv").string(), quality);

  StageRecord s;
  s.name = "simulate";
  s.outputs = {
      artifact(ctx, ctx.data / "notes.tsv", static_cast<std::int64_t>(result.notes.size())),
      artifact(ctx, ctx.data / "ratings.tsv",
               static_cast<std::int64_t>(result.ratings.size())),
      artifact(ctx, ctx.data / "posts.tsv", static_cast<std::int64_t>(result.posts.size())),
      artifact(ctx, ctx.data / "ground_truth.tsv",
               static_cast<std::int64_t>(result.truth.rating_group.size())),
      artifact(ctx, ctx.data / "ground_truth_notes.tsv",
               static_cast<std::int64_t>(result.notes.size())),
      artifact(ctx, ctx.data / "bias.tsv", static_cast<std::int64_t>(bias.size())),
      artifact(ctx, ctx.data / "quality.tsv", static_cast<std::int64_t>(quality.size())),
  };
  return s;
}

StageRecord stage_ingest(RunContext& ctx) {
  require_file(ctx, ctx.data / "ratings.tsv", "simulate");
  require_file(ctx, ctx.data / "notes.tsv", "simulate");

  struct Row {
    std::string kind;
    IngestReport report;
  };
  std::vector<Row> rows;
  {
    Row r{"ratings", {}};
    read_ratings_tsv({(ctx.data / "ratings.tsv").string()}, &r.report);
    rows.push_back(r);
  }
  {
    Row r{"notes", {}};
    read_notes_tsv({(ctx.data / "notes.tsv").string()}, &r.report);
    rows.push_back(r);
  }
  for (const char* kind : {"posts", "status"}) {
    fs::path p = ctx.data / (std::string(kind) + ".tsv");
    if (!fs::exists(p)) continue;
    Row r{kind, {}};
    if (std::string(kind) == "posts") read_posts_tsv({p.string()}, &r.report);
    else read_status_tsv({p.string()}, &r.report);
    rows.push_back(r);
  }
  for (const char* kind : {"bias", "quality"}) {
    fs::path p = ctx.data / (std::string(kind) + ".tsv");
    if (!fs::exists(p)) continue;
    Row r{kind, {}};
    read_score_tsv({p.string()}, &r.report);
    rows.push_back(r);
  }

  fs::path out = ctx.dir / "ingest_report.tsv";
  {
    TsvWriter w(out.string(), {"kind", "files", "rows_read", "rows_dropped",
                               "distinct_notes", "distinct_raters", "distinct_posts"});
    for (const auto& r : rows)
      w.row({r.kind, format_int(static_cast<std::int64_t>(r.report.files)),
             format_int(static_cast<std::int64_t>(r.report.rows_read)),
             format_int(static_cast<std::int64_t>(r.report.rows_dropped)),
             format_int(static_cast<std::int64_t>(r.report.distinct_notes)),
             format_int(static_cast<std::int64_t>(r.report.distinct_raters)),
             format_int(static_cast<std::int64_t>(r.report.distinct_posts))});
  }

  for (const char* name :
       {"ratings.tsv", "notes.tsv", "posts.tsv", "status.tsv", "bias.tsv", "quality.tsv"}) {
    fs::path p = ctx.data / name;
    if (fs::exists(p)) ctx.manifest.input_digests[rel(ctx, p)] = file_digest(p);
  }

  StageRecord s;
  s.name = "ingest";
  s.outputs = {artifact(ctx, out, static_cast<std::int64_t>(rows.size()))};
  return s;
}

StageRecord stage_score(RunContext& ctx) {
  require_file(ctx, ctx.dir / "ingest_report.tsv", "ingest");
  auto events = load_sorted_ratings(ctx);
  if (events.empty()) throw StageError("score: no ratings to fit");
  RatingMatrix matrix = latest_rating_matrix(events);
  ScorerConfig config = ctx.config.scorer();
  ScoringModel model = fit(matrix, config);
  fs::path out = ctx.dir / "scores.tsv";
  write_scores_tsv(out.string(), model, matrix, config.thresholds);

  StageRecord s;
  s.name = "score";
  s.outputs = {artifact(ctx, out, static_cast<std::int64_t>(model.note_ids.size()))};
  return s;
}

StageRecord stage_replay(RunContext& ctx) {
  require_file(ctx, ctx.dir / "ingest_report.tsv", "ingest");
  auto events = load_sorted_ratings(ctx);
  if (events.empty()) throw StageError("replay: no ratings to replay");
  auto timelines = replay(events, ctx.config.scorer(), ctx.config.rescore_interval());
  fs::path out = ctx.dir / "timelines.tsv";
  write_timelines_tsv(out.string(), timelines);

  std::int64_t rows = 0;
  for (const auto& tl : timelines) rows += static_cast<std::int64_t>(tl.entries.size());
  StageRecord s;
  s.name = "replay";
  s.outputs = {artifact(ctx, out, rows)};
  return s;
}

StageRecord stage_embed(RunContext& ctx) {
  require_file(ctx, ctx.dir / "ingest_report.tsv", "ingest");
  auto events = load_sorted_ratings(ctx);
  EmbedderConfig config = ctx.config.embedder();
  FilterReport filter_report;
  RatingMatrix filtered = filter_dataset(events, config, &filter_report);
  ScoringModel model = fit_embeddings(filtered, config);
  CopairStats stats = copair_distributions(filtered, model, config);
  if (config.recompute_thresholds) {
    config.similar_threshold = stats.same_mean;
    config.dissimilar_threshold = stats.opposite_mean;
  }
  ClassificationQuality quality = classification_quality(model, filtered);

  fs::path bin = ctx.dir / "embeddings.bin";
  write_embeddings(bin, model);

  auto notes = read_notes_tsv({(ctx.data / "notes.tsv").string()});
  std::map<NoteId, const NoteRecord*> note_of;
  for (const auto& n : notes) note_of[n.note_id] = &n;

  RatingMatrix full = latest_rating_matrix(events);
  std::vector<std::vector<RaterId>> raters_by_note(full.notes());
  for (const auto& c : full.cells)
    raters_by_note[static_cast<std::size_t>(c.note)].push_back(
        full.rater_ids[static_cast<std::size_t>(c.rater)]);
  std::vector<NoteRaterRelation> relations;
  for (std::size_t n = 0; n < full.notes(); ++n) {
    auto it = note_of.find(full.note_ids[n]);
    if (it == note_of.end()) continue;
    for (auto& r : classify_relations(*it->second, raters_by_note[n], model, config))
      relations.push_back({full.note_ids[n], std::move(r)});
  }
  fs::path rel_path = ctx.dir / "relations.tsv";
  write_relations_tsv(rel_path, relations);

  fs::path metrics = ctx.dir / "embed_metrics.tsv";
  {
    TsvWriter w(metrics.string(), {"metric", "value"});
    auto put = [&](const char* k, double v) { w.row({k, format_double(v)}); };
    put("weighted_f1", quality.weighted_f1);
    put("weighted_precision", quality.weighted_precision);
    put("weighted_recall", quality.weighted_recall);
    put("classified_cells", static_cast<double>(quality.n));
    put("final_mse", model.final_loss);
    put("same_mean", stats.same_mean);
    put("same_std", stats.same_std);
    put("same_count", static_cast<double>(stats.same_count));
    put("opposite_mean", stats.opposite_mean);
    put("opposite_std", stats.opposite_std);
    put("opposite_count", static_cast<double>(stats.opposite_count));
    put("copair_count", static_cast<double>(stats.pair_count));
    put("similar_threshold", config.similar_threshold);
    put("dissimilar_threshold", config.dissimilar_threshold);
    put("filtered_notes_removed", static_cast<double>(filter_report.notes_removed));
    put("filtered_raters_removed", static_cast<double>(filter_report.raters_removed));
  }

  StageRecord s;
  s.name = "embed";
  s.outputs = {artifact(ctx, bin, -1),
               artifact(ctx, rel_path, static_cast<std::int64_t>(relations.size())),
               artifact(ctx, metrics, 16)};
  return s;
}

StageRecord stage_panel(RunContext& ctx) {
  require_file(ctx, ctx.dir / "timelines.tsv", "replay");
  require_file(ctx, ctx.dir / "relations.tsv", "embed");
  auto events = load_sorted_ratings(ctx);
  auto timelines = load_timelines(ctx);

  std::unordered_map<NoteId, EpochMs> display;
  for (const auto& tl : timelines)
    if (auto t = tl.display_time()) display[tl.note_id] = *t;

  StageRecord s;
  s.name = "panel";
  auto emit = [&](const std::string& name, std::span<const RatingEvent> evs) {
    PanelBuildResult built = build_its_panel(evs, display);
    fs::path out = ctx.dir / name;
    write_panel_tsv(out.string(), built.observations);
    s.outputs.push_back(
        artifact(ctx, out, static_cast<std::int64_t>(built.observations.size())));
  };
  emit("panel_all.tsv", events);

  auto relation_rows = read_relations_tsv(ctx.dir / "relations.tsv");
  RelationIndex relations(relation_rows);
  std::map<RaterClass, std::vector<RatingEvent>> by_class;
  for (const auto& e : events)
    by_class[relations.at(e.note_id, e.rater_id)].push_back(e);
  emit("panel_similar.tsv", by_class[RaterClass::Similar]);
  emit("panel_general.tsv", by_class[RaterClass::General]);
  emit("panel_dissimilar.tsv", by_class[RaterClass::Dissimilar]);
  return s;
}

StageRecord stage_its(RunContext& ctx) {
  require_file(ctx, ctx.dir / "panel_all.tsv", "panel");
  require_file(ctx, ctx.dir / "timelines.tsv", "replay");
  auto timelines = load_timelines(ctx);

  std::set<NoteId> stable, disappeared;
  for (const auto& tl : timelines) {
    if (!tl.displayed) continue;
    if (tl.disappeared) disappeared.insert(tl.note_id);
    else stable.insert(tl.note_id);
  }

  auto panel_all = read_panel_tsv((ctx.dir / "panel_all.tsv").string());
  auto subset = [&](const std::set<NoteId>& keep) {
    std::vector<PanelObservation> out;
    for (const auto& obs : panel_all)
      if (keep.count(obs.note_id)) out.push_back(obs);
    return out;
  };

  struct Model {
    std::string file;
    ItsOutcome outcome;
    std::string subgroup;
    std::vector<PanelObservation> panel;
  };
  std::vector<Model> models;
  for (ItsOutcome outcome : {ItsOutcome::Count, ItsOutcome::Leaning}) {
    std::string prefix = "its_" + outcome_name(outcome) + "_";
    models.push_back({prefix + "all.tsv", outcome, "all", panel_all});
    models.push_back({prefix + "stable.tsv", outcome, "stable", subset(stable)});
    models.push_back({prefix + "disappeared.tsv", outcome, "disappeared",
                      subset(disappeared)});
    for (const char* group : {"similar", "general", "dissimilar"}) {
      fs::path p = ctx.dir / ("panel_" + std::string(group) + ".tsv");
      if (!fs::exists(p)) continue;
      models.push_back({prefix + group + ".tsv", outcome, group,
                        read_panel_tsv(p.string())});
    }
  }

  StageRecord s;
  s.name = "its";
  std::vector<std::pair<std::string, std::string>> skipped;
  for (auto& m : models) {
    if (m.panel.empty()) {
      skipped.push_back({m.file, "empty subgroup"});
      continue;
    }
    try {
      ItsReport report = its_report(m.panel, m.outcome, m.subgroup);
      fs::path out = ctx.dir / m.file;
      write_its_report_tsv(out.string(), report);
      s.outputs.push_back(
          artifact(ctx, out, static_cast<std::int64_t>(report.terms.size())));
    } catch (const EstimationError& err) {
      skipped.push_back({m.file, err.what()});
    }
  }
  fs::path skipped_path = ctx.dir / "its_skipped.tsv";
  {
    TsvWriter w(skipped_path.string(), {"model", "reason"});
    for (const auto& [file, reason] : skipped) w.row({file, reason});
  }
  s.outputs.push_back(
      artifact(ctx, skipped_path, static_cast<std::int64_t>(skipped.size())));
  return s;
}

StageRecord stage_counterfactual(RunContext& ctx) {
  require_file(ctx, ctx.dir / "timelines.tsv", "replay");
  require_file(ctx, ctx.dir / "relations.tsv", "embed");
  auto events = load_sorted_ratings(ctx);
  auto timelines = load_timelines(ctx);
  auto relation_rows = read_relations_tsv(ctx.dir / "relations.tsv");
  RelationIndex relations(relation_rows);
  ExclusionPolicy policy = ctx.config.counterfactual_policy();

  ExclusionReport exclusion;
  auto filtered = apply_policy(events, relations, timelines, policy, &exclusion);
  if (filtered.empty()) throw StageError("counterfactual: policy removed every rating");
  DeltaReport report =
      rescore_diff(events, filtered, ctx.config.scorer(), timelines,
                   ctx.config.bootstrap_seed(), ctx.config.bootstrap_samples());

  fs::path notes_path = ctx.dir / "counterfactual.tsv";
  fs::path summary_path = ctx.dir / "counterfactual_summary.tsv";
  write_counterfactual_tsv(notes_path, report);
  write_counterfactual_summary_tsv(summary_path, report);

  fs::path excl_path = ctx.dir / "exclusion_report.tsv";
  {
    TsvWriter w(excl_path.string(), {"group", "removed"});
    for (RaterClass c :
         {RaterClass::Similar, RaterClass::General, RaterClass::Dissimilar}) {
      auto it = exclusion.removed_by_group.find(c);
      std::size_t n = it == exclusion.removed_by_group.end() ? 0 : it->second;
      w.row({rater_class_name(c), format_int(static_cast<std::int64_t>(n))});
    }
    w.row({"TOTAL", format_int(static_cast<std::int64_t>(exclusion.removed_total))});
  }

  StageRecord s;
  s.name = "counterfactual";
  s.outputs = {artifact(ctx, notes_path, static_cast<std::int64_t>(report.notes.size())),
               artifact(ctx, summary_path, static_cast<std::int64_t>(report.cohorts.size())),
               artifact(ctx, excl_path, 4)};
  return s;
}

void append_file(std::ostringstream& out, const fs::path& path, const std::string& title) {
  if (!fs::exists(path)) return;
  std::ifstream in(path);
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  out << "== " << title << " ==\n" << content << "\n";
}

StageRecord stage_report(RunContext& ctx) {
  require_file(ctx, ctx.dir / "scores.tsv", "score");
  require_file(ctx, ctx.dir / "timelines.tsv", "replay");

  std::ostringstream out;
  out << "community-note scoring pipeline report\n";
  out << "run " << ctx.manifest.run_id << " (config " << ctx.manifest.config_hash
      << ")\n\n";

  append_file(out, ctx.dir / "ingest_report.tsv", "ingestion");

  {
    auto timelines = load_timelines(ctx);
    std::size_t displayed = 0, disappeared = 0;
    for (const auto& tl : timelines) {
      if (tl.displayed) ++displayed;
      if (tl.disappeared) ++disappeared;
    }
    out << "== status replay ==\n";
    out << "notes\t" << timelines.size() << "\n";
    out << "displayed\t" << displayed << "\n";
    out << "disappeared\t" << disappeared << "\n";
    if (displayed > 0)
      out << "disappeared_share_of_displayed\t"
          << format_double(static_cast<double>(disappeared) /
                           static_cast<double>(displayed))
          << "\n";
    out << "\n";
  }

  if (fs::exists(ctx.data / "ground_truth.tsv")) {
    TsvReader reader((ctx.data / "ground_truth.tsv").string());
    std::size_t label_col = reader.require_column("groupLabel");
    std::map<std::string, std::size_t> counts;
    std::size_t total = 0;
    std::vector<std::string> fields;
    while (reader.next_row(fields)) {
      if (fields.size() <= label_col) continue;
      ++counts[fields[label_col]];
      ++total;
    }
    out << "== simulated rating groups ==\n";
    for (const auto& [label, n] : counts)
      out << label << "\t" << n << "\t"
          << format_double(static_cast<double>(n) / static_cast<double>(total)) << "\n";
    out << "\n";
  }

  if (fs::exists(ctx.data / "bias.tsv") && fs::exists(ctx.data / "notes.tsv")) {
    auto notes = read_notes_tsv({(ctx.data / "notes.tsv").string()});
    auto bias = read_score_tsv({(ctx.data / "bias.tsv").string()});
    auto quality = read_score_tsv({(ctx.data / "quality.tsv").string()});
    std::size_t scored = 0, high = 0;
    double bias_sum = 0.0;
    for (const auto& n : notes) {
      if (auto b = domain_bias_score(n, bias)) {
        ++scored;
        bias_sum += *b;
      }
      if (auto q = domain_quality_score(n, quality); q && q->high) ++high;
    }
    out << "== cited domains ==\n";
    out << "notes_with_bias_score\t" << scored << "\n";
    if (scored > 0)
      out << "mean_bias\t" << format_double(bias_sum / static_cast<double>(scored))
          << "\n";
    out << "notes_high_quality\t" << high << "\n\n";
  }

  append_file(out, ctx.dir / "embed_metrics.tsv", "embedding");

  bool any_its = false;
  for (ItsOutcome outcome : {ItsOutcome::Count, ItsOutcome::Leaning})
    for (const char* group :
         {"all", "stable", "disappeared", "similar", "general", "dissimilar"}) {
      fs::path p = ctx.dir / ("its_" + outcome_name(outcome) + "_" + group + ".tsv");
      if (!fs::exists(p)) continue;
      append_file(out, p, "ITS " + outcome_name(outcome) + " / " + group);
      any_its = true;
    }
  if (any_its)
    out << "note: count models absorb per-note fixed effects as indicator columns;"
           " with short panels those estimates carry the usual incidental-parameters"
           " caveat, so read the shared terms, not the note effects.\n\n";
  append_file(out, ctx.dir / "its_skipped.tsv", "ITS models skipped");

  append_file(out, ctx.dir / "counterfactual_summary.tsv", "counterfactual cohorts");
  append_file(out, ctx.dir / "exclusion_report.tsv", "counterfactual exclusions");

  fs::path report_path = ctx.dir / "report.txt";
  {
    std::ofstream f(report_path, std::ios::trunc);
    if (!f) throw StageError("cannot write " + report_path.string());
    f << out.str();
  }

  StageRecord s;
  s.name = "report";
  s.outputs = {artifact(ctx, report_path, -1)};
  return s;
}

using StageFn = StageRecord (*)(RunContext&);

const std::vector<std::pair<std::string, StageFn>>& stage_table() {
  static const std::vector<std::pair<std::string, StageFn>> table = {
      {"simulate", stage_simulate}, {"ingest", stage_ingest},
      {"score", stage_score},       {"replay", stage_replay},
      {"embed", stage_embed},       {"panel", stage_panel},
      {"its", stage_its},           {"counterfactual", stage_counterfactual},
      {"report", stage_report},
  };
  return table;
}

void execute(RunContext& ctx, const std::string& name, StageFn fn) {
  auto start = std::chrono::steady_clock::now();
  StageRecord record;
  try {
    record = fn(ctx);
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name + ": " + e.what());
  }
  record.wall_ms = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - start)
                       .count();
  ctx.manifest.record(std::move(record));
  ctx.manifest.save(ctx.dir / "manifest.json");
}

}  // namespace

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, fn] : stage_table()) out.push_back(name);
    return out;
  }();
  return names;
}

std::filesystem::path run(const std::string& stage, const RunOptions& options) {
  bool all = stage == "all";
  StageFn single = nullptr;
  if (!all) {
    for (const auto& [name, fn] : stage_table())
      if (name == stage) single = fn;
    if (!single) throw UsageError("unknown stage: " + stage);
  }
  if (options.config_path.empty()) throw UsageError("--config is required");

  Config config;
  try {
    config = Config::load(options.config_path);
    if (options.seed_override) config.override_seed(*options.seed_override);
    // Surface bad values before locking the run directory.
    config.sim();
    config.scorer();
    config.embedder();
    config.counterfactual_policy();
    config.rescore_interval();
    config.bootstrap_samples();
    config.bootstrap_seed();
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  RunContext ctx;
  ctx.options = options;
  ctx.config = config;
  ctx.dir = options.run_dir;
  ctx.data = ctx.dir / "data";
  std::filesystem::create_directories(ctx.dir);

  LockFile lock(ctx.dir, options.force);

  const std::string hash = config.hash();
  fs::path hash_path = ctx.dir / "config.hash";
  if (fs::exists(hash_path)) {
    std::ifstream in(hash_path);
    std::string previous;
    in >> previous;
    if (previous != hash && !options.force)
      throw StageError("run directory was produced with a different config (" +
                       previous + " vs " + hash + "); use --force to overwrite");
  }
  {
    std::ofstream out(hash_path, std::ios::trunc);
    out << hash << "\n";
  }

  fs::path manifest_path = ctx.dir / "manifest.json";
  if (fs::exists(manifest_path)) ctx.manifest = RunManifest::load(manifest_path);
  ctx.manifest.run_id = "run-" + hash.substr(0, 12);
  ctx.manifest.config_hash = hash;
  ctx.manifest.input_digests["config"] = file_digest(options.config_path);
  ctx.manifest.seeds["sim"] = config.sim().seed;
  ctx.manifest.seeds["scorer"] = config.scorer().seed;
  ctx.manifest.seeds["embedder"] = config.embedder().seed;
  ctx.manifest.seeds["bootstrap"] = config.bootstrap_seed();

  if (all) {
    for (const auto& [name, fn] : stage_table()) execute(ctx, name, fn);
  } else {
    execute(ctx, stage, single);
  }
  return manifest_path;
}

}  // namespace notekit
