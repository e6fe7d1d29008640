#include "lac/synthgen.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lac/error.hpp"
#include "lac/logparse.hpp"
#include "lac/random.hpp"

namespace lac {

namespace {

using nlohmann::json;

constexpr std::size_t kExternalPool = 50;
constexpr double kExternalRecipientProb = 0.15;
// A seeded anomaly day carries 40-60 events, roughly the volume of a normal
// day, so that the window is about a tenth of the employee's rows.
constexpr std::size_t kBurstMinimum = 40;
constexpr std::size_t kBurstSpread = 20;

// Intra-day activity mix of a normal employee. Device entries open a
// Connect/Disconnect pair.
struct MixEntry {
  int code;
  double weight;
};
constexpr MixEntry kRoutineMix[] = {
    {activity::www_visit, 38}, {activity::send, 12},  {activity::view, 14},
    {activity::www_download, 4}, {13, 9}, {14, 1}, {15, 2}, {7, 2}, {11, 1},
    {17, 1},                     {activity::connect, 3},
};

struct PendingRow {
  Timestamp ts;
  std::uint32_t employee = 0;
  std::uint32_t seq = 0;
  int code = 0;
  std::vector<std::string> to, cc, bcc;
  std::string from;
};

struct Organization {
  std::size_t size = 0;
  std::vector<std::size_t> community;  // planted label per employee
};

std::string external_address(std::size_t k) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "contact%02zu@example.net", k);
  return buf;
}

int seconds_of(int h, int m, int s = 0) { return h * 3600 + m * 60 + s; }

Timestamp at(const CivilDate& day, int seconds_into_day) {
  return make_timestamp(day, seconds_into_day / 3600, (seconds_into_day / 60) % 60,
                        seconds_into_day % 60);
}

std::vector<CivilDate> working_days(CivilDate start, std::size_t count) {
  std::vector<CivilDate> days;
  std::int64_t d = days_from_civil(start);
  while (days.size() < count) {
    const CivilDate date = civil_from_days(d++);
    if (weekday(date) < 5) days.push_back(date);
  }
  return days;
}

double recipient_prob(const GenConfig& cfg, const Organization& org,
                      std::size_t a, std::size_t b) {
  return org.community[a] == org.community[b] ? cfg.intra_email_prob
                                              : cfg.inter_email_prob;
}

class Simulator {
 public:
  Simulator(const GenConfig& cfg, const Organization& org)
      : cfg_(cfg), org_(org) {}

  std::map<SourceKind, std::vector<PendingRow>> rows;

  void add(SourceKind kind, std::size_t employee, Timestamp ts, int code,
           PendingRow row = {}) {
    row.ts = ts;
    row.employee = static_cast<std::uint32_t>(employee);
    row.seq = seq_++;
    row.code = code;
    rows[kind].push_back(std::move(row));
  }

  // Emits one activity of `employee` at `ts`, filling email endpoints.
  void emit(std::size_t employee, Timestamp ts, int code, Rng& rng) {
    const ActivityCode activity(code);
    if (activity.source() != SourceKind::email) {
      add(activity.source(), employee, ts, code);
      return;
    }
    PendingRow row;
    if (code == activity::send) {
      std::vector<std::string> recipients;
      for (std::size_t j = 0; j < org_.size; ++j) {
        if (j != employee && rng.bernoulli(recipient_prob(cfg_, org_, employee, j))) {
          recipients.push_back(email_address(j));
        }
      }
      if (recipients.empty() || rng.bernoulli(kExternalRecipientProb)) {
        recipients.push_back(external_address(
            static_cast<std::size_t>(rng.uniform_int(0, kExternalPool - 1))));
      }
      rng.shuffle(recipients);
      row.to.push_back(recipients.front());
      for (std::size_t r = 1; r < recipients.size(); ++r) {
        const double u = rng.uniform();
        (u < 0.6 ? row.to : u < 0.9 ? row.cc : row.bcc).push_back(recipients[r]);
      }
      row.from = email_address(employee);
    } else {
      std::vector<double> weights(org_.size, 0.0);
      for (std::size_t j = 0; j < org_.size; ++j) {
        if (j != employee) weights[j] = recipient_prob(cfg_, org_, employee, j);
      }
      const bool any = std::any_of(weights.begin(), weights.end(),
                                   [](double w) { return w > 0.0; });
      row.from = any ? email_address(rng.categorical(weights))
                     : external_address(static_cast<std::size_t>(
                           rng.uniform_int(0, kExternalPool - 1)));
      row.to.push_back(email_address(employee));
    }
    add(SourceKind::email, employee, ts, code, std::move(row));
  }

  void routine_day(std::size_t employee, const CivilDate& day, Rng& rng) {
    const int logon = static_cast<int>(rng.uniform_int(seconds_of(8, 30), seconds_of(9, 30)));
    const int logoff = static_cast<int>(rng.uniform_int(seconds_of(17, 0), seconds_of(18, 0)));
    emit(employee, at(day, logon), activity::logon, rng);

    static const std::vector<double> weights = [] {
      std::vector<double> w;
      for (const auto& m : kRoutineMix) w.push_back(m.weight);
      return w;
    }();
    const auto count = rng.uniform_int(20, 60);
    std::vector<std::pair<int, int>> events;  // (seconds, code)
    for (std::int64_t k = 0; k < count; ++k) {
      const int t = static_cast<int>(rng.uniform_int(logon + 1, logoff - 2));
      const int code = kRoutineMix[rng.categorical(weights)].code;
      events.emplace_back(t, code);
      if (code == activity::connect) {
        events.emplace_back(static_cast<int>(rng.uniform_int(t + 1, logoff - 1)),
                            activity::disconnect);
      }
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [t, code] : events) emit(employee, at(day, t), code, rng);
    emit(employee, at(day, logoff), activity::logoff, rng);
  }

  AnomalyDay anomaly_day(std::size_t employee, const CivilDate& day,
                         AnomalyArchetype archetype, std::size_t per_day_min,
                         Rng& rng) {
    AnomalyDay out{day, {}};
    std::vector<std::pair<int, int>> events;
    const auto burst = static_cast<int>(
        rng.uniform_int(static_cast<std::int64_t>(per_day_min),
                        static_cast<std::int64_t>(per_day_min + kBurstSpread)));
    switch (archetype) {
      case AnomalyArchetype::off_hours_session: {
        // Every archetype runs late at night; early-morning hours (all-zero
        // high bits) are reconstructed too easily to stand out.
        const int start = static_cast<int>(rng.uniform_int(seconds_of(22, 0), seconds_of(22, 25)));
        const int end = start + 90 * 60;
        events.emplace_back(start, activity::logon);
        const int inner = std::max(burst - 2, 1);
        for (int k = 0; k < inner; ++k) {
          const int code = k % 2 == 0 ? activity::www_upload : activity::www_visit;
          events.emplace_back(static_cast<int>(rng.uniform_int(start + 1, end - 1)), code);
        }
        events.emplace_back(end, activity::logoff);
        break;
      }
      case AnomalyArchetype::removable_exfiltration: {
        const int start = static_cast<int>(rng.uniform_int(seconds_of(22, 0), seconds_of(22, 30)));
        const int end = start + 60 * 60;
        events.emplace_back(start, activity::connect);
        const int inner = std::max(burst - 2, 1);
        for (int k = 0; k < inner; ++k) {
          events.emplace_back(static_cast<int>(rng.uniform_int(start + 1, end - 1)),
                              rng.bernoulli(0.3) ? 10 : 9);
        }
        events.emplace_back(end, activity::disconnect);
        break;
      }
      case AnomalyArchetype::upload_burst: {
        const int start = static_cast<int>(rng.uniform_int(seconds_of(22, 0), seconds_of(22, 30)));
        const int end = start + 60 * 60;
        for (int k = 0; k < burst; ++k) {
          events.emplace_back(static_cast<int>(rng.uniform_int(start, end)),
                              activity::www_upload);
        }
        break;
      }
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [t, code] : events) {
      emit(employee, at(day, t), code, rng);
      out.codes.push_back(code);
    }
    return out;
  }

 private:
  const GenConfig& cfg_;
  const Organization& org_;
  std::uint32_t seq_ = 0;
};

const char* kWords[] = {"meeting", "report", "quarterly", "budget", "review",
                        "project", "schedule", "update", "draft", "notes",
                        "client", "invoice", "design", "plan", "status"};

std::string placeholder_text(Rng& rng) {
  const auto n = rng.uniform_int(3, 8);
  std::string text = "\"";
  for (std::int64_t i = 0; i < n; ++i) {
    if (i > 0) text += (rng.bernoulli(0.15) ? ", " : " ");
    text += kWords[rng.uniform_int(0, std::size(kWords) - 1)];
  }
  return text + "\"";
}

std::string join_addresses(const std::vector<std::string>& list) {
  std::string s;
  for (const auto& a : list) s += (s.empty() ? "" : ";") + a;
  return s;
}

char id_prefix(SourceKind kind) {
  switch (kind) {
    case SourceKind::logon: return 'L';
    case SourceKind::device: return 'D';
    case SourceKind::file: return 'F';
    case SourceKind::http: return 'H';
    case SourceKind::email: return 'M';
  }
  return 'X';
}

std::string header_line(SourceKind kind) {
  std::string line;
  for (auto c : expected_columns(kind)) line += (line.empty() ? "" : ",") + std::string(c);
  return line + "\n";
}

std::string format_rows(SourceKind kind, std::vector<PendingRow>& rows,
                        std::uint64_t seed) {
  std::sort(rows.begin(), rows.end(), [](const PendingRow& a, const PendingRow& b) {
    if (a.ts != b.ts) return a.ts < b.ts;
    if (a.employee != b.employee) return a.employee < b.employee;
    return a.seq < b.seq;
  });
  Rng rng(derive_seed(seed, 100 + static_cast<std::uint64_t>(kind)));
  std::string out = header_line(kind);
  std::size_t n = 0;
  char id[32];
  for (const auto& row : rows) {
    std::snprintf(id, sizeof id, "{%c-%08zu}", id_prefix(kind), ++n);
    out += id;
    out += ',';
    out += format_log_timestamp(row.ts);
    out += ',';
    out += employee_id(row.employee);
    out += ',';
    out += pc_id(row.employee);
    out += ',';
    const std::string_view activity = ActivityCode(row.code).name();
    switch (kind) {
      case SourceKind::email:
        out += join_addresses(row.to) + ',' + join_addresses(row.cc) + ',' +
               join_addresses(row.bcc) + ',' + row.from + ',' +
               std::string(activity) + ',' +
               std::to_string(rng.uniform_int(1000, 60000)) + ',' +
               (rng.bernoulli(0.2) ? "attachment_" + std::to_string(rng.uniform_int(1, 999)) + ".pdf"
                                   : std::string()) +
               ',' + placeholder_text(rng);
        break;
      case SourceKind::file: {
        const bool from_bit = activity[activity.size() - 5] == '1';
        const bool to_bit = activity[activity.size() - 3] == '1';
        out += (from_bit ? "R:\\" : "C:\\") + std::string("docs\\file_") +
               std::to_string(rng.uniform_int(1, 9999)) + ".docx," +
               std::string(activity) + ',' + (to_bit ? "True" : "False") + ',' +
               (from_bit ? "True" : "False") + ',' + placeholder_text(rng);
        break;
      }
      case SourceKind::http:
        out += "http://site" + std::to_string(rng.uniform_int(1, 500)) +
               ".example.com/page," + std::string(activity) + ',' +
               placeholder_text(rng);
        break;
      case SourceKind::device:
        out += (row.code == activity::connect ? std::string("R:\\;R:\\docs") : std::string()) +
               ',' + std::string(activity);
        break;
      case SourceKind::logon:
        out += std::string(activity);
        break;
    }
    out += '\n';
  }
  return out;
}

}  // namespace

void GenConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw UsageError("invalid generator config: " + what);
  };
  if (intra_email_prob < 0.0 || intra_email_prob > 1.0) {
    fail("intra_email_prob must lie in [0, 1]");
  }
  if (inter_email_prob < 0.0 || inter_email_prob > 1.0) {
    fail("inter_email_prob must lie in [0, 1]");
  }
  if (!(inter_email_prob < intra_email_prob)) {
    fail("inter_email_prob must be < intra_email_prob");
  }
  if (day_count == 0) fail("day_count must be positive");
  if (anomaly_count > employee_count) fail("anomaly_count must be <= employee_count");
  if (!is_valid_date(start_date)) fail("start_date is not a calendar date");
  if (employee_count == 0) return;  // header-only dataset
  if (community_count == 0) fail("community_count must be positive");
  if (community_count > employee_count) {
    fail("community_count must be <= employee_count");
  }
}

std::string_view archetype_name(AnomalyArchetype a) {
  switch (a) {
    case AnomalyArchetype::off_hours_session: return "off_hours_session";
    case AnomalyArchetype::removable_exfiltration: return "removable_exfiltration";
    case AnomalyArchetype::upload_burst: return "upload_burst";
  }
  return "unknown";
}

std::size_t AnomalyWindow::event_count() const {
  std::size_t n = 0;
  for (const auto& d : days) n += d.codes.size();
  return n;
}

std::string employee_id(std::size_t index) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "EMP%04zu", index);
  return buf;
}

std::string pc_id(std::size_t index) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "PC-%04zu", index);
  return buf;
}

std::string email_address(std::size_t index) {
  return employee_id(index) + "@" + std::string(kInternalDomain);
}

GeneratedDataset generate_dataset(const GenConfig& config) {
  config.validate();
  GeneratedDataset data;

  Organization org;
  org.size = config.employee_count;
  Rng structure(derive_seed(config.rng_seed, 1));
  for (std::size_t i = 0; i < org.size; ++i) {
    org.community.push_back(i % config.community_count);
  }
  structure.shuffle(org.community);
  for (std::size_t i = 0; i < org.size; ++i) {
    data.truth.planted_partition[employee_id(i)] = org.community[i];
  }

  // Anomalies go round-robin over a shuffled community order so that they
  // land in distinct communities whenever possible.
  std::vector<std::size_t> anomalies;
  std::vector<std::size_t> community_order;
  for (std::size_t c = 0; c < config.community_count && org.size > 0; ++c) {
    community_order.push_back(c);
  }
  structure.shuffle(community_order);
  for (std::size_t a = 0; a < config.anomaly_count; ++a) {
    std::vector<std::size_t> candidates;
    const std::size_t c = community_order[a % community_order.size()];
    for (std::size_t i = 0; i < org.size; ++i) {
      if (org.community[i] == c &&
          std::find(anomalies.begin(), anomalies.end(), i) == anomalies.end()) {
        candidates.push_back(i);
      }
    }
    if (candidates.empty()) {
      for (std::size_t i = 0; i < org.size; ++i) {
        if (std::find(anomalies.begin(), anomalies.end(), i) == anomalies.end()) {
          candidates.push_back(i);
        }
      }
    }
    anomalies.push_back(candidates[static_cast<std::size_t>(
        structure.uniform_int(0, static_cast<std::int64_t>(candidates.size()) - 1))]);
  }

  const auto days = working_days(config.start_date, config.day_count);
  const std::size_t window = std::min(kAnomalyWindowDays, days.size());
  const std::size_t per_day_min =
      std::max<std::size_t>(kBurstMinimum, (kMinInjectedEvents + window - 1) / window);

  Simulator sim(config, org);
  for (std::size_t i = 0; i < org.size; ++i) {
    Rng rng(derive_seed(config.rng_seed, 1000 + i));
    const auto it = std::find(anomalies.begin(), anomalies.end(), i);
    std::size_t window_start = days.size();
    AnomalyWindow anomaly;
    if (it != anomalies.end()) {
      const auto a = static_cast<std::size_t>(it - anomalies.begin());
      anomaly.archetype = static_cast<AnomalyArchetype>(a % 3);
      // Windows fall in the last quarter, i.e. inside the held-out 30%.
      const std::size_t latest = days.size() - window;
      const std::size_t earliest = std::min(latest, (days.size() * 3 + 3) / 4);
      window_start = static_cast<std::size_t>(rng.uniform_int(
          static_cast<std::int64_t>(earliest), static_cast<std::int64_t>(latest)));
    }
    for (std::size_t d = 0; d < days.size(); ++d) {
      sim.routine_day(i, days[d], rng);
      if (d >= window_start && d < window_start + window) {
        anomaly.days.push_back(
            sim.anomaly_day(i, days[d], anomaly.archetype, per_day_min, rng));
      }
    }
    if (it != anomalies.end()) {
      data.truth.anomalous_employee_ids.insert(employee_id(i));
      data.truth.anomaly_windows[employee_id(i)] = std::move(anomaly);
    }
  }

  for (SourceKind kind : kAllSources) {
    auto& rows = sim.rows[kind];
    data.row_counts[kind] = rows.size();
    data.files[kind] = format_rows(kind, rows, config.rng_seed);
  }
  return data;
}

void write_dataset(const GeneratedDataset& data, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
  for (const auto& [kind, text] : data.files) {
    const auto path = dir / source_file_name(kind);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw DataError("write failed: " + path.string());
  }
  write_answer_file(data.truth, dir / "answers.json");
}

void write_answer_file(const GroundTruth& truth, const std::filesystem::path& path) {
  json doc;
  doc["format"] = "lac-answers";
  doc["version"] = kAnswerFormatVersion;
  doc["anomalous_employees"] = truth.anomalous_employee_ids;
  doc["planted_partition"] = truth.planted_partition;
  json windows = json::array();
  for (const auto& [id, w] : truth.anomaly_windows) {
    json days = json::array();
    for (const auto& d : w.days) {
      days.push_back({{"date", format_iso_date(d.date)}, {"codes", d.codes}});
    }
    windows.push_back(
        {{"employee", id}, {"archetype", archetype_name(w.archetype)}, {"days", days}});
  }
  doc["anomaly_windows"] = windows;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << doc.dump(2) << '\n';
  if (!out) throw DataError("write failed: " + path.string());
}

GroundTruth read_answer_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  GroundTruth truth;
  try {
    const json doc = json::parse(in);
    if (doc.at("format") != "lac-answers") {
      throw DataError(path.string() + ": not an answer file");
    }
    if (doc.at("version").get<int>() != kAnswerFormatVersion) {
      throw DataError(path.string() + ": unsupported answer file version");
    }
    truth.anomalous_employee_ids =
        doc.at("anomalous_employees").get<std::set<std::string>>();
    truth.planted_partition =
        doc.at("planted_partition").get<std::map<std::string, std::size_t>>();
    for (const auto& w : doc.at("anomaly_windows")) {
      AnomalyWindow window;
      const auto name = w.at("archetype").get<std::string>();
      bool known = false;
      for (auto a : {AnomalyArchetype::off_hours_session,
                     AnomalyArchetype::removable_exfiltration,
                     AnomalyArchetype::upload_burst}) {
        if (archetype_name(a) == name) {
          window.archetype = a;
          known = true;
        }
      }
      if (!known) throw DataError(path.string() + ": unknown archetype " + name);
      for (const auto& d : w.at("days")) {
        const auto date = parse_iso_date(d.at("date").get<std::string>());
        if (!date) throw DataError(path.string() + ": bad date in anomaly window");
        window.days.push_back({*date, d.at("codes").get<std::vector<int>>()});
      }
      truth.anomaly_windows[w.at("employee").get<std::string>()] = std::move(window);
    }
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return truth;
}

}  // namespace lac
