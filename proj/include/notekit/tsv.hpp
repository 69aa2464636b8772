#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "notekit/types.hpp"

namespace notekit {

struct IngestError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Counts accumulated while reading one kind of TSV input. Malformed rows are
// dropped and counted, never coerced.
struct IngestReport {
  std::size_t rows_read = 0;
  std::size_t rows_dropped = 0;
  std::size_t distinct_notes = 0;
  std::size_t distinct_raters = 0;
  std::size_t distinct_posts = 0;
  std::size_t files = 0;
};

std::vector<RatingEvent> read_ratings_tsv(const std::vector<std::string>& paths,
                                          IngestReport* report = nullptr);
std::vector<NoteRecord> read_notes_tsv(const std::vector<std::string>& paths,
                                       IngestReport* report = nullptr);
std::vector<StatusEntry> read_status_tsv(const std::vector<std::string>& paths,
                                         IngestReport* report = nullptr);
std::vector<PostRecord> read_posts_tsv(const std::vector<std::string>& paths,
                                       IngestReport* report = nullptr);

// bias.tsv / quality.tsv: hostname <tab> score.
using ScoreLookup = std::unordered_map<std::string, double>;
ScoreLookup read_score_tsv(const std::vector<std::string>& paths,
                           IngestReport* report = nullptr);

void write_ratings_tsv(const std::string& path, const std::vector<RatingEvent>& events);
void write_notes_tsv(const std::string& path, const std::vector<NoteRecord>& notes);
void write_status_tsv(const std::string& path, const std::vector<StatusEntry>& entries);
void write_posts_tsv(const std::string& path, const std::vector<PostRecord>& posts);
void write_score_tsv(const std::string& path, const ScoreLookup& lookup);

// Shortest round-trip decimal form (std::to_chars).
std::string format_double(double value);
std::string format_int(std::int64_t value);

std::optional<double> parse_double(std::string_view text);
std::optional<std::int64_t> parse_int(std::string_view text);
std::vector<std::string> split(std::string_view line, char sep);

// Generic TSV access used by the typed readers and the report writers.
class TsvReader {
 public:
  explicit TsvReader(const std::string& path);
  // Index of a header column; throws IngestError naming the column if absent.
  std::size_t require_column(const std::string& name) const;
  bool next_row(std::vector<std::string>& fields);

 private:
  std::vector<std::string> header_;
  std::vector<std::string> lines_;
  std::size_t pos_ = 0;
};

class TsvWriter {
 public:
  TsvWriter(const std::string& path, const std::vector<std::string>& header);
  ~TsvWriter();
  void row(const std::vector<std::string>& fields);

 private:
  struct Impl;
  Impl* impl_;
};

}  // namespace notekit
