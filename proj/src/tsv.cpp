#include "notekit/tsv.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>

namespace notekit {

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t at = line.find(sep, start);
    if (at == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      return out;
    }
    out.emplace_back(line.substr(start, at - start));
    start = at + 1;
  }
}

std::optional<double> parse_double(std::string_view text) {
  double value = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) return std::nullopt;
  return value;
}

std::optional<std::int64_t> parse_int(std::string_view text) {
  std::int64_t value = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) return std::nullopt;
  return value;
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

std::string format_int(std::int64_t value) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

TsvReader::TsvReader(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open " + path);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (first) {
      header_ = split(line, '\t');
      first = false;
    } else {
      lines_.push_back(line);
    }
  }
  if (first) throw IngestError("empty file (no header row): " + path);
}

std::size_t TsvReader::require_column(const std::string& name) const {
  auto it = std::find(header_.begin(), header_.end(), name);
  if (it == header_.end())
    throw IngestError("missing mandatory column '" + name + "'");
  return static_cast<std::size_t>(it - header_.begin());
}

bool TsvReader::next_row(std::vector<std::string>& fields) {
  if (pos_ >= lines_.size()) return false;
  fields = split(lines_[pos_++], '\t');
  return true;
}

struct TsvWriter::Impl {
  std::ofstream out;
};

TsvWriter::TsvWriter(const std::string& path, const std::vector<std::string>& header)
    : impl_(new Impl) {
  impl_->out.open(path);
  if (!impl_->out) {
    delete impl_;
    throw IngestError("cannot write " + path);
  }
  row(header);
}

TsvWriter::~TsvWriter() { delete impl_; }

void TsvWriter::row(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) impl_->out << '\t';
    impl_->out << fields[i];
  }
  impl_->out << '\n';
}

namespace {

// All typed readers share the same loop: resolve mandatory columns once per
// file (so header defects fail hard even on empty files), then parse rows,
// dropping and counting anything malformed.
template <class Record, class Resolve, class Parse>
std::vector<Record> read_kind(const std::vector<std::string>& paths,
                              IngestReport* report, Resolve resolve, Parse parse) {
  std::vector<Record> out;
  IngestReport local;
  for (const auto& path : paths) {
    TsvReader reader(path);
    auto cols = resolve(reader);
    ++local.files;
    std::vector<std::string> fields;
    while (reader.next_row(fields)) {
      ++local.rows_read;
      std::optional<Record> rec = parse(cols, fields);
      if (rec) {
        out.push_back(std::move(*rec));
      } else {
        ++local.rows_dropped;
      }
    }
  }
  if (report) *report = local;
  return out;
}

template <class Records, class Key>
std::size_t count_distinct(const Records& records, Key key) {
  std::set<std::string> seen;
  for (const auto& r : records) seen.insert(key(r));
  return seen.size();
}

std::string field_at(const std::vector<std::string>& fields, std::size_t idx,
                     bool* ok) {
  if (idx >= fields.size()) {
    *ok = false;
    return {};
  }
  return fields[idx];
}

}  // namespace

std::vector<RatingEvent> read_ratings_tsv(const std::vector<std::string>& paths,
                                          IngestReport* report) {
  struct Cols {
    std::size_t note, rater, created, level;
  };
  auto events = read_kind<RatingEvent>(
      paths, report,
      [](const TsvReader& r) {
        return Cols{r.require_column("noteId"), r.require_column("raterParticipantId"),
                    r.require_column("createdAtMillis"),
                    r.require_column("helpfulnessLevel")};
      },
      [](const Cols& c,
         const std::vector<std::string>& fields) -> std::optional<RatingEvent> {
        bool ok = true;
        RatingEvent e;
        e.note_id = field_at(fields, c.note, &ok);
        e.rater_id = field_at(fields, c.rater, &ok);
        auto created = parse_int(field_at(fields, c.created, &ok));
        auto level = parse_level(field_at(fields, c.level, &ok));
        if (!ok || !created || *created <= 0 || !level || e.note_id.empty() ||
            e.rater_id.empty())
          return std::nullopt;
        e.created_at = *created;
        e.level = *level;
        return e;
      });
  if (report) {
    report->distinct_notes =
        count_distinct(events, [](const RatingEvent& e) { return e.note_id; });
    report->distinct_raters =
        count_distinct(events, [](const RatingEvent& e) { return e.rater_id; });
  }
  return events;
}

std::vector<NoteRecord> read_notes_tsv(const std::vector<std::string>& paths,
                                       IngestReport* report) {
  struct Cols {
    std::size_t note, writer, post, created, domains;
  };
  auto notes = read_kind<NoteRecord>(
      paths, report,
      [](const TsvReader& r) {
        return Cols{r.require_column("noteId"),
                    r.require_column("noteAuthorParticipantId"),
                    r.require_column("tweetId"), r.require_column("createdAtMillis"),
                    r.require_column("citedDomains")};
      },
      [](const Cols& c,
         const std::vector<std::string>& fields) -> std::optional<NoteRecord> {
        bool ok = true;
        NoteRecord n;
        n.note_id = field_at(fields, c.note, &ok);
        n.writer_id = field_at(fields, c.writer, &ok);
        n.post_id = field_at(fields, c.post, &ok);
        auto created_at = parse_int(field_at(fields, c.created, &ok));
        std::string joined = field_at(fields, c.domains, &ok);
        if (!ok || !created_at || *created_at <= 0 || n.note_id.empty() ||
            n.writer_id.empty())
          return std::nullopt;
        n.created_at = *created_at;
        if (!joined.empty())
          for (auto& d : split(joined, ','))
            if (!d.empty()) n.cited_domains.push_back(std::move(d));
        return n;
      });
  if (report)
    report->distinct_notes =
        count_distinct(notes, [](const NoteRecord& n) { return n.note_id; });
  return notes;
}

std::vector<StatusEntry> read_status_tsv(const std::vector<std::string>& paths,
                                         IngestReport* report) {
  struct Cols {
    std::size_t note, at, status;
  };
  auto entries = read_kind<StatusEntry>(
      paths, report,
      [](const TsvReader& r) {
        return Cols{r.require_column("noteId"), r.require_column("timestampMillis"),
                    r.require_column("status")};
      },
      [](const Cols& c,
         const std::vector<std::string>& fields) -> std::optional<StatusEntry> {
        bool ok = true;
        StatusEntry s;
        s.note_id = field_at(fields, c.note, &ok);
        auto ts = parse_int(field_at(fields, c.at, &ok));
        auto st = parse_status(field_at(fields, c.status, &ok));
        if (!ok || !ts || *ts <= 0 || !st || s.note_id.empty()) return std::nullopt;
        s.at = *ts;
        s.status = *st;
        return s;
      });
  if (report)
    report->distinct_notes =
        count_distinct(entries, [](const StatusEntry& s) { return s.note_id; });
  return entries;
}

std::vector<PostRecord> read_posts_tsv(const std::vector<std::string>& paths,
                                       IngestReport* report) {
  struct Cols {
    std::size_t post, author, politics, science, health, economy, spos, sneg, media,
        verified, age, followers, followees, misinfo, partisan;
  };
  auto posts = read_kind<PostRecord>(
      paths, report,
      [](const TsvReader& r) {
        return Cols{r.require_column("postId"),
                    r.require_column("authorId"),
                    r.require_column("topic_politics"),
                    r.require_column("topic_science"),
                    r.require_column("topic_health"),
                    r.require_column("topic_economy"),
                    r.require_column("sentiment_pos"),
                    r.require_column("sentiment_neg"),
                    r.require_column("has_media"),
                    r.require_column("verified"),
                    r.require_column("account_age_days"),
                    r.require_column("followers"),
                    r.require_column("followees"),
                    r.require_column("misinfo_exposure"),
                    r.require_column("partisan_score")};
      },
      [](const Cols& c,
         const std::vector<std::string>& fields) -> std::optional<PostRecord> {
        bool ok = true;
        auto flag = [&fields, &ok](std::size_t idx) -> std::optional<bool> {
          auto v = parse_int(field_at(fields, idx, &ok));
          if (!v || (*v != 0 && *v != 1)) return std::nullopt;
          return *v == 1;
        };
        PostRecord p;
        p.post_id = field_at(fields, c.post, &ok);
        p.author_id = field_at(fields, c.author, &ok);
        auto tp = flag(c.politics), ts = flag(c.science), th = flag(c.health),
             te = flag(c.economy), hm = flag(c.media), vf = flag(c.verified);
        auto sp = parse_double(field_at(fields, c.spos, &ok));
        auto sn = parse_double(field_at(fields, c.sneg, &ok));
        auto ag = parse_double(field_at(fields, c.age, &ok));
        auto fo = parse_int(field_at(fields, c.followers, &ok));
        auto fe = parse_int(field_at(fields, c.followees, &ok));
        auto mi = parse_double(field_at(fields, c.misinfo, &ok));
        auto pa = parse_double(field_at(fields, c.partisan, &ok));
        if (!ok || !tp || !ts || !th || !te || !hm || !vf || !sp || !sn || !ag ||
            !fo || !fe || !mi || !pa || p.post_id.empty())
          return std::nullopt;
        if (*mi < 0 || *mi > 1 || *pa < -1 || *pa > 1 || *fo < 0 || *fe < 0)
          return std::nullopt;
        p.topic_politics = *tp;
        p.topic_science = *ts;
        p.topic_health = *th;
        p.topic_economy = *te;
        p.sentiment_pos = *sp;
        p.sentiment_neg = *sn;
        p.has_media = *hm;
        p.verified = *vf;
        p.account_age_days = *ag;
        p.followers = *fo;
        p.followees = *fe;
        p.misinfo_exposure = *mi;
        p.partisan_score = *pa;
        return p;
      });
  if (report)
    report->distinct_posts =
        count_distinct(posts, [](const PostRecord& p) { return p.post_id; });
  return posts;
}

ScoreLookup read_score_tsv(const std::vector<std::string>& paths,
                           IngestReport* report) {
  struct Cols {
    std::size_t host, score;
  };
  struct Row {
    std::string host;
    double score;
  };
  auto rows = read_kind<Row>(
      paths, report,
      [](const TsvReader& r) {
        return Cols{r.require_column("hostname"), r.require_column("score")};
      },
      [](const Cols& c, const std::vector<std::string>& fields) -> std::optional<Row> {
        bool ok = true;
        Row row;
        row.host = field_at(fields, c.host, &ok);
        auto s = parse_double(field_at(fields, c.score, &ok));
        if (!ok || !s || row.host.empty()) return std::nullopt;
        row.score = *s;
        return row;
      });
  ScoreLookup lookup;
  for (auto& r : rows) lookup[r.host] = r.score;
  return lookup;
}

void write_ratings_tsv(const std::string& path, const std::vector<RatingEvent>& events) {
  TsvWriter w(path, {"noteId", "raterParticipantId", "createdAtMillis", "helpfulnessLevel"});
  for (const auto& e : events)
    w.row({e.note_id, e.rater_id, format_int(e.created_at), level_name(e.level)});
}

void write_notes_tsv(const std::string& path, const std::vector<NoteRecord>& notes) {
  TsvWriter w(path, {"noteId", "noteAuthorParticipantId", "tweetId", "createdAtMillis",
                     "citedDomains"});
  for (const auto& n : notes) {
    std::string joined;
    for (std::size_t i = 0; i < n.cited_domains.size(); ++i) {
      if (i) joined += ',';
      joined += n.cited_domains[i];
    }
    w.row({n.note_id, n.writer_id, n.post_id, format_int(n.created_at), joined});
  }
}

void write_status_tsv(const std::string& path, const std::vector<StatusEntry>& entries) {
  TsvWriter w(path, {"noteId", "timestampMillis", "status"});
  for (const auto& s : entries)
    w.row({s.note_id, format_int(s.at), status_name(s.status)});
}

void write_posts_tsv(const std::string& path, const std::vector<PostRecord>& posts) {
  TsvWriter w(path, {"postId", "authorId", "topic_politics", "topic_science",
                     "topic_health", "topic_economy", "sentiment_pos", "sentiment_neg",
                     "has_media", "verified", "account_age_days", "followers",
                     "followees", "misinfo_exposure", "partisan_score"});
  for (const auto& p : posts)
    w.row({p.post_id, p.author_id, format_int(p.topic_politics),
           format_int(p.topic_science), format_int(p.topic_health),
           format_int(p.topic_economy), format_double(p.sentiment_pos),
           format_double(p.sentiment_neg), format_int(p.has_media),
           format_int(p.verified), format_double(p.account_age_days),
           format_int(p.followers), format_int(p.followees),
           format_double(p.misinfo_exposure), format_double(p.partisan_score)});
}

void write_score_tsv(const std::string& path, const ScoreLookup& lookup) {
  std::vector<std::pair<std::string, double>> rows(lookup.begin(), lookup.end());
  std::sort(rows.begin(), rows.end());
  TsvWriter w(path, {"hostname", "score"});
  for (const auto& [host, score] : rows) w.row({host, format_double(score)});
}

}  // namespace notekit
