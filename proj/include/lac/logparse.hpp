#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lac/activity.hpp"
#include "lac/civil_time.hpp"

namespace lac {

struct LogEvent {
  std::string employee;
  std::string pc;
  Timestamp timestamp;
  ActivityCode activity{ActivityCode::kMin};
  SourceKind source = SourceKind::logon;
  std::string raw_id;

  friend bool operator==(const LogEvent&, const LogEvent&) = default;
};

/// Total order used inside a timeline: timestamp, then source kind, then id.
bool event_before(const LogEvent& a, const LogEvent& b);

/// One email row reduced to its sender and the union of to/cc/bcc.
struct EmailEdgeRecord {
  std::string from;
  std::vector<std::string> recipients;
  Timestamp timestamp;

  friend bool operator==(const EmailEdgeRecord&, const EmailEdgeRecord&) = default;
};

struct ParseDiagnostic {
  std::size_t line = 0;
  std::string reason;
};

struct ParseStats {
  std::size_t rows = 0;      // data rows seen (header excluded)
  std::size_t accepted = 0;
  std::size_t skipped = 0;
  std::vector<ParseDiagnostic> diagnostics;  // first kMaxDiagnostics skips
};

struct ParseResult {
  std::vector<LogEvent> events;
  std::vector<EmailEdgeRecord> emails;  // email files only
  ParseStats stats;
};

/// Column names of each file, in order.
std::span<const std::string_view> expected_columns(SourceKind kind);

/// Splits one comma-separated line. Double-quoted fields may contain commas
/// and doubled quotes.
std::vector<std::string_view> split_csv_line(std::string_view line,
                                             std::vector<std::string>& scratch);

/// Row-at-a-time parser for one file kind. Holds no state besides the
/// counters, so memory use does not grow with the file.
class LogParser {
 public:
  static constexpr std::size_t kMaxDiagnostics = 100;

  using EventSink = std::function<void(LogEvent&&)>;
  using EmailSink = std::function<void(EmailEdgeRecord&&)>;

  explicit LogParser(SourceKind kind);

  SourceKind kind() const { return kind_; }

  /// Validates the header line. Throws DataError naming the file kind if the
  /// column set differs from the expected one.
  void read_header(std::string_view line);

  /// Parses one data row. Malformed rows are counted and skipped.
  void parse_row(std::string_view line, const EventSink& on_event,
                 const EmailSink& on_email);

  const ParseStats& stats() const { return stats_; }

 private:
  void skip(std::string reason);

  SourceKind kind_;
  bool header_seen_ = false;
  std::size_t line_ = 1;
  ParseStats stats_;
  std::vector<std::string> scratch_;
};

/// Streams `in` through a LogParser, calling the sinks for each good row.
ParseStats parse_log_stream(SourceKind kind, std::istream& in,
                            const LogParser::EventSink& on_event,
                            const LogParser::EmailSink& on_email);

/// Collecting convenience wrapper over parse_log_stream.
ParseResult parse_log(SourceKind kind, std::istream& in);

struct Timeline {
  std::string employee;
  std::vector<LogEvent> events;
};

/// Groups events by employee and sorts each group with event_before.
std::map<std::string, Timeline> build_timelines(std::vector<LogEvent> events);

/// Everything `lac ingest` extracts from a log directory.
struct EventStore {
  std::vector<LogEvent> events;
  std::vector<EmailEdgeRecord> emails;
  std::map<SourceKind, ParseStats> stats;
};

/// Parses the five files in `dir`. Throws DataError if one is missing.
EventStore ingest_directory(const std::filesystem::path& dir);

/// Versioned little-endian binary intermediate (see docs/formats.md).
inline constexpr std::uint32_t kEventStoreVersion = 1;
void write_event_store(const EventStore& store, const std::filesystem::path& path);
EventStore read_event_store(const std::filesystem::path& path);

}  // namespace lac
