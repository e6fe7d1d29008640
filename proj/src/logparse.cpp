#include "lac/logparse.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>

#include "lac/binary_io.hpp"
#include "lac/error.hpp"

namespace lac {

namespace {

constexpr std::array<std::string_view, 12> kEmailColumns = {
    "Id", "date", "employee", "PC", "to", "cc", "bcc", "from", "activity",
    "size", "attachments", "contents"};
constexpr std::array<std::string_view, 9> kFileColumns = {
    "Id", "date", "employee", "PC", "filename", "activity",
    "to_removable_media", "from_removable_media", "content"};
constexpr std::array<std::string_view, 7> kHttpColumns = {
    "Id", "date", "employee", "PC", "url", "activity", "content"};
constexpr std::array<std::string_view, 6> kDeviceColumns = {
    "Id", "date", "employee", "PC", "file-tree", "activity"};
constexpr std::array<std::string_view, 5> kLogonColumns = {
    "Id", "date", "employee", "PC", "activity"};

// Shared column positions.
constexpr std::size_t kIdCol = 0;
constexpr std::size_t kDateCol = 1;
constexpr std::size_t kEmployeeCol = 2;
constexpr std::size_t kPcCol = 3;

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

// Case-insensitive, `_` == `-`, and the CERT release spellings
// ("user", "content") accepted for "employee" / "contents".
std::string normalize_column(std::string_view name) {
  std::string out;
  for (char c : trim(name)) {
    char l = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    out.push_back(l == '_' ? '-' : l);
  }
  if (out == "user") return "employee";
  if (out == "contents") return "content";
  return out;
}

std::size_t activity_column(SourceKind kind) {
  switch (kind) {
    case SourceKind::email: return 8;
    case SourceKind::file: return 5;
    case SourceKind::http: return 5;
    case SourceKind::device: return 5;
    case SourceKind::logon: return 4;
  }
  return 4;
}

std::optional<bool> parse_flag(std::string_view text) {
  text = trim(text);
  if (text == "True" || text == "true" || text == "TRUE" || text == "1") {
    return true;
  }
  if (text == "False" || text == "false" || text == "FALSE" || text == "0") {
    return false;
  }
  return std::nullopt;
}

void split_addresses(std::string_view field, std::vector<std::string>& out) {
  while (!field.empty()) {
    const auto pos = field.find(';');
    const std::string_view part = trim(field.substr(0, pos));
    if (!part.empty()) out.emplace_back(part);
    if (pos == std::string_view::npos) break;
    field.remove_prefix(pos + 1);
  }
}

// File rows: the activity carries the `_from_to_decoy` suffix. A bare
// operation name ("File Open", as in the CERT release) is also accepted, with
// the removable bits read from the columns and decoy = 0.
std::optional<ActivityCode> file_activity(std::string_view activity,
                                          std::string_view to_col,
                                          std::string_view from_col,
                                          std::string& error) {
  const auto to_flag = parse_flag(to_col);
  const auto from_flag = parse_flag(from_col);
  if (auto code = activity_from_string(SourceKind::file, activity)) {
    const std::string_view name = code->name();
    const bool from_bit = name[name.size() - 5] == '1';
    const bool to_bit = name[name.size() - 3] == '1';
    if ((to_flag && *to_flag != to_bit) || (from_flag && *from_flag != from_bit)) {
      error = "file activity suffix disagrees with removable-media columns";
      return std::nullopt;
    }
    return code;
  }
  static constexpr std::array<std::pair<std::string_view, FileOperation>, 4>
      kOps = {{{"File Copy", FileOperation::copy},
               {"File Delete", FileOperation::remove},
               {"File Open", FileOperation::open},
               {"File Write", FileOperation::write}}};
  for (const auto& [name, op] : kOps) {
    if (activity == name) {
      if (!to_flag || !from_flag) {
        error = "unparseable removable-media flags";
        return std::nullopt;
      }
      auto code = file_activity_code(op, FileFlags{*from_flag, *to_flag, false});
      if (!code) error = "file activity combination outside the taxonomy";
      return code;
    }
  }
  error = "unknown activity '" + std::string(activity) + "'";
  return std::nullopt;
}

}  // namespace

bool event_before(const LogEvent& a, const LogEvent& b) {
  if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
  if (a.source != b.source) return a.source < b.source;
  return a.raw_id < b.raw_id;
}

std::span<const std::string_view> expected_columns(SourceKind kind) {
  switch (kind) {
    case SourceKind::email: return kEmailColumns;
    case SourceKind::file: return kFileColumns;
    case SourceKind::http: return kHttpColumns;
    case SourceKind::device: return kDeviceColumns;
    case SourceKind::logon: return kLogonColumns;
  }
  return {};
}

std::vector<std::string_view> split_csv_line(std::string_view line,
                                             std::vector<std::string>& scratch) {
  std::vector<std::string_view> fields;
  scratch.clear();
  // Views point into scratch, so it must never reallocate below.
  scratch.reserve(static_cast<std::size_t>(std::count(line.begin(), line.end(), '"')));
  std::size_t pos = 0;
  while (true) {
    if (pos < line.size() && line[pos] == '"') {
      // Quoted field; unescape into scratch only when it contains "".
      std::size_t end = pos + 1;
      bool escaped = false;
      while (end < line.size()) {
        if (line[end] == '"') {
          if (end + 1 < line.size() && line[end + 1] == '"') {
            escaped = true;
            end += 2;
            continue;
          }
          break;
        }
        ++end;
      }
      std::string_view body = line.substr(pos + 1, end - pos - 1);
      if (escaped) {
        std::string unescaped;
        for (std::size_t i = 0; i < body.size(); ++i) {
          unescaped.push_back(body[i]);
          if (body[i] == '"') ++i;
        }
        scratch.push_back(std::move(unescaped));
        body = scratch.back();
      }
      fields.push_back(body);
      pos = std::min(end + 1, line.size());
      // Anything between the closing quote and the next comma is dropped.
      const auto comma = line.find(',', pos);
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    } else {
      const auto comma = line.find(',', pos);
      if (comma == std::string_view::npos) {
        fields.push_back(line.substr(pos));
        break;
      }
      fields.push_back(line.substr(pos, comma - pos));
      pos = comma + 1;
    }
  }
  return fields;
}

LogParser::LogParser(SourceKind kind) : kind_(kind) {}

void LogParser::read_header(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  const auto fields = split_csv_line(line, scratch_);
  const auto expected = expected_columns(kind_);
  bool ok = fields.size() == expected.size();
  for (std::size_t i = 0; ok && i < fields.size(); ++i) {
    ok = normalize_column(fields[i]) == normalize_column(expected[i]);
  }
  if (!ok) {
    std::string want;
    for (auto c : expected) want += (want.empty() ? "" : ",") + std::string(c);
    throw DataError(std::string(source_file_name(kind_)) +
                    ": unexpected header '" + std::string(line) +
                    "', expected '" + want + "'");
  }
  header_seen_ = true;
  line_ = 1;
}

void LogParser::skip(std::string reason) {
  ++stats_.skipped;
  if (stats_.diagnostics.size() < kMaxDiagnostics) {
    stats_.diagnostics.push_back({line_, std::move(reason)});
  }
}

void LogParser::parse_row(std::string_view line, const EventSink& on_event,
                          const EmailSink& on_email) {
  if (!header_seen_) {
    throw DataError(std::string(source_file_name(kind_)) + ": missing header");
  }
  ++line_;
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  if (trim(line).empty()) return;
  ++stats_.rows;

  const auto fields = split_csv_line(line, scratch_);
  if (fields.size() != expected_columns(kind_).size()) {
    skip("expected " + std::to_string(expected_columns(kind_).size()) +
         " fields, found " + std::to_string(fields.size()));
    return;
  }

  const auto ts = parse_log_timestamp(trim(fields[kDateCol]));
  if (!ts) {
    skip("bad timestamp '" + std::string(fields[kDateCol]) + "'");
    return;
  }
  const std::string_view employee = trim(fields[kEmployeeCol]);
  if (employee.empty()) {
    skip("empty employee");
    return;
  }

  const std::string_view activity_text = trim(fields[activity_column(kind_)]);
  std::optional<ActivityCode> code;
  std::string error;
  if (kind_ == SourceKind::file) {
    code = file_activity(activity_text, fields[6], fields[7], error);
  } else {
    code = activity_from_string(kind_, activity_text);
    if (!code) error = "unknown activity '" + std::string(activity_text) + "'";
  }
  if (!code) {
    skip(std::move(error));
    return;
  }

  if (kind_ == SourceKind::email) {
    EmailEdgeRecord record;
    record.from = std::string(trim(fields[7]));
    for (std::size_t col : {4u, 5u, 6u}) split_addresses(fields[col], record.recipients);
    if (record.from.empty() || record.recipients.empty()) {
      skip("email without sender or recipients");
      return;
    }
    record.timestamp = *ts;
    if (on_email) on_email(std::move(record));
  }

  ++stats_.accepted;
  if (on_event) {
    on_event(LogEvent{std::string(employee), std::string(trim(fields[kPcCol])),
                      *ts, *code, kind_, std::string(trim(fields[kIdCol]))});
  }
}

ParseStats parse_log_stream(SourceKind kind, std::istream& in,
                            const LogParser::EventSink& on_event,
                            const LogParser::EmailSink& on_email) {
  LogParser parser(kind);
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError(std::string(source_file_name(kind)) + ": missing header");
  }
  parser.read_header(line);
  while (std::getline(in, line)) parser.parse_row(line, on_event, on_email);
  return parser.stats();
}

ParseResult parse_log(SourceKind kind, std::istream& in) {
  ParseResult result;
  result.stats = parse_log_stream(
      kind, in, [&](LogEvent&& e) { result.events.push_back(std::move(e)); },
      [&](EmailEdgeRecord&& r) { result.emails.push_back(std::move(r)); });
  return result;
}

std::map<std::string, Timeline> build_timelines(std::vector<LogEvent> events) {
  std::map<std::string, Timeline> timelines;
  for (auto& e : events) {
    auto [it, inserted] = timelines.try_emplace(e.employee);
    if (inserted) it->second.employee = e.employee;
    it->second.events.push_back(std::move(e));
  }
  for (auto& [id, timeline] : timelines) {
    std::sort(timeline.events.begin(), timeline.events.end(), event_before);
  }
  return timelines;
}

EventStore ingest_directory(const std::filesystem::path& dir) {
  EventStore store;
  for (SourceKind kind : kAllSources) {
    const auto path = dir / source_file_name(kind);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    store.stats[kind] = parse_log_stream(
        kind, in, [&](LogEvent&& e) { store.events.push_back(std::move(e)); },
        [&](EmailEdgeRecord&& r) { store.emails.push_back(std::move(r)); });
  }
  return store;
}

namespace {
constexpr char kEventMagic[8] = {'L', 'A', 'C', 'E', 'V', 'T', 'S', '\0'};
}

void write_event_store(const EventStore& store,
                       const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  BinaryWriter w(out);
  w.put_bytes(kEventMagic, sizeof kEventMagic);
  w.put(kEventStoreVersion);
  w.put(static_cast<std::uint64_t>(store.events.size()));
  for (const auto& e : store.events) {
    w.put_string(e.employee);
    w.put_string(e.pc);
    w.put(e.timestamp.seconds);
    w.put(static_cast<std::uint8_t>(e.activity.value()));
    w.put(static_cast<std::uint8_t>(e.source));
    w.put_string(e.raw_id);
  }
  w.put(static_cast<std::uint64_t>(store.emails.size()));
  for (const auto& r : store.emails) {
    w.put_string(r.from);
    w.put(static_cast<std::uint32_t>(r.recipients.size()));
    for (const auto& to : r.recipients) w.put_string(to);
    w.put(r.timestamp.seconds);
  }
  w.put(static_cast<std::uint32_t>(store.stats.size()));
  for (const auto& [kind, stats] : store.stats) {
    w.put(static_cast<std::uint8_t>(kind));
    w.put(static_cast<std::uint64_t>(stats.rows));
    w.put(static_cast<std::uint64_t>(stats.accepted));
    w.put(static_cast<std::uint64_t>(stats.skipped));
  }
  if (!out) throw DataError("write failed: " + path.string());
}

EventStore read_event_store(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  BinaryReader r(in, path.string());
  char magic[8];
  r.get_bytes(magic, sizeof magic);
  if (!std::equal(std::begin(magic), std::end(magic), std::begin(kEventMagic))) {
    throw DataError(path.string() + ": not an event store");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kEventStoreVersion) {
    throw DataError(path.string() + ": unsupported event store version " +
                    std::to_string(version));
  }
  EventStore store;
  const auto n_events = r.get<std::uint64_t>();
  store.events.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(n_events, 1u << 24)));
  for (std::uint64_t i = 0; i < n_events; ++i) {
    LogEvent e;
    e.employee = r.get_string();
    e.pc = r.get_string();
    e.timestamp.seconds = r.get<std::int64_t>();
    const auto code = ActivityCode::try_make(r.get<std::uint8_t>());
    const auto source = r.get<std::uint8_t>();
    if (!code || source > static_cast<std::uint8_t>(SourceKind::email) ||
        code->source() != static_cast<SourceKind>(source)) {
      throw DataError(path.string() + ": corrupt event record");
    }
    e.activity = *code;
    e.source = static_cast<SourceKind>(source);
    e.raw_id = r.get_string();
    store.events.push_back(std::move(e));
  }
  const auto n_emails = r.get<std::uint64_t>();
  for (std::uint64_t i = 0; i < n_emails; ++i) {
    EmailEdgeRecord rec;
    rec.from = r.get_string();
    const auto n_to = r.get<std::uint32_t>();
    for (std::uint32_t j = 0; j < n_to; ++j) rec.recipients.push_back(r.get_string());
    rec.timestamp.seconds = r.get<std::int64_t>();
    store.emails.push_back(std::move(rec));
  }
  const auto n_stats = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_stats; ++i) {
    const auto kind = static_cast<SourceKind>(r.get<std::uint8_t>());
    ParseStats s;
    s.rows = r.get<std::uint64_t>();
    s.accepted = r.get<std::uint64_t>();
    s.skipped = r.get<std::uint64_t>();
    store.stats[kind] = s;
  }
  return store;
}

}  // namespace lac
