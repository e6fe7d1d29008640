#include <doctest.h>

#include <fstream>
#include <sstream>

#include "lac/error.hpp"
#include "lac/logparse.hpp"
#include "oracles.hpp"

using namespace lac;

namespace {

ParseResult parse_text(SourceKind kind, const std::string& text) {
  std::istringstream in(text);
  return parse_log(kind, in);
}

const char* kLogonHeader = "Id,date,employee,PC,activity\n";
const char* kFileHeader =
    "Id,date,employee,PC,filename,activity,to_removable_media,from_removable_media,content\n";
const char* kEmailHeader =
    "Id,date,employee,PC,to,cc,bcc,from,activity,size,attachments,contents\n";
const char* kHttpHeader = "Id,date,employee,PC,url,activity,content\n";

}  // namespace

TEST_CASE("logon row with Logon becomes code 2") {
  const auto r = parse_text(SourceKind::logon,
                            std::string(kLogonHeader) + "{A1},01/04/2010 08:45:10,EMP0001,PC-0001,Logon\n");
  REQUIRE(r.events.size() == 1);
  const LogEvent& e = r.events[0];
  CHECK(e.activity.value() == 2);
  CHECK(e.employee == "EMP0001");
  CHECK(e.pc == "PC-0001");
  CHECK(e.raw_id == "{A1}");
  CHECK(e.source == SourceKind::logon);
  CHECK(format_log_timestamp(e.timestamp) == "01/04/2010 08:45:10");
  CHECK(r.stats.skipped == 0);
}

TEST_CASE("http row with WWW Visit becomes code 21") {
  const auto r = parse_text(
      SourceKind::http,
      std::string(kHttpHeader) + "{H1},01/04/2010 10:00:00,EMP0002,PC-0002,http://a.example/x,WWW Visit,\"words, with commas\"\n");
  REQUIRE(r.events.size() == 1);
  CHECK(r.events[0].activity.value() == 21);
}

TEST_CASE("file row File Open not removable not decoy becomes code 13") {
  const auto suffixed = parse_text(
      SourceKind::file,
      std::string(kFileHeader) + "{F1},01/04/2010 10:00:00,EMP0003,PC-0003,C:\\a.doc,File Open_0_0_0,False,False,\"x\"\n");
  REQUIRE(suffixed.events.size() == 1);
  CHECK(suffixed.events[0].activity.value() == 13);

  // The bare CERT spelling derives the flags from the columns.
  const auto bare = parse_text(
      SourceKind::file,
      std::string(kFileHeader) + "{F2},01/04/2010 10:00:00,EMP0003,PC-0003,C:\\a.doc,File Open,False,False,x\n"
                                 "{F3},01/04/2010 10:00:01,EMP0003,PC-0003,R:\\b.doc,File Copy,True,False,x\n");
  REQUIRE(bare.events.size() == 2);
  CHECK(bare.events[0].activity.value() == 13);
  CHECK(bare.events[1].activity.value() == 7);
}

TEST_CASE("file suffix contradicting the removable columns is skipped") {
  const auto r = parse_text(
      SourceKind::file,
      std::string(kFileHeader) + "{F1},01/04/2010 10:00:00,EMP0003,PC-0003,a,File Copy_0_1_0,False,False,x\n");
  CHECK(r.events.empty());
  CHECK(r.stats.skipped == 1);
}

TEST_CASE("email rows produce events and edge records") {
  const auto r = parse_text(
      SourceKind::email,
      std::string(kEmailHeader) +
          "{M1},01/04/2010 11:00:00,EMP0001,PC-0001,EMP0002@dtaa.test;x@example.net,EMP0003@dtaa.test,,EMP0001@dtaa.test,Send,100,0,\"hi, there\"\n"
          "{M2},01/04/2010 11:05:00,EMP0002,PC-0002,EMP0002@dtaa.test,,,EMP0001@dtaa.test,View,100,0,\n");
  REQUIRE(r.events.size() == 2);
  CHECK(r.events[0].activity.value() == 5);
  CHECK(r.events[1].activity.value() == 6);
  REQUIRE(r.emails.size() == 2);
  CHECK(r.emails[0].from == "EMP0001@dtaa.test");
  CHECK(r.emails[0].recipients ==
        std::vector<std::string>{"EMP0002@dtaa.test", "x@example.net", "EMP0003@dtaa.test"});
}

TEST_CASE("malformed rows are counted with a diagnostic, never dropped silently") {
  const auto r = parse_text(SourceKind::logon, std::string(kLogonHeader) +
                                                    "{A1},01/04/2010 08:45:10,EMP0001,PC-0001,Logon\n"
                                                    "{A2},13/04/2010 08:45:10,EMP0001,PC-0001,Logon\n"
                                                    "{A3},01/04/2010 08:45:10,EMP0001,PC-0001,Login\n"
                                                    "{A4},01/04/2010 08:45:10,EMP0001,PC-0001\n"
                                                    "{A5},01/04/2010 08:45:10,,PC-0001,Logoff\n"
                                                    "\n"
                                                    "{A6},01/04/2010 17:45:10,EMP0001,PC-0001,Logoff\r\n");
  CHECK(r.stats.rows == 6);
  CHECK(r.stats.accepted == 2);
  CHECK(r.stats.skipped == 4);
  CHECK(r.events.size() == 2);
  REQUIRE(r.stats.diagnostics.size() == 4);
  CHECK(r.stats.diagnostics[0].line == 3);
  CHECK(r.stats.diagnostics[1].reason.find("Login") != std::string::npos);
}

TEST_CASE("fuzzed activity strings are skipped, never miscoded") {
  std::mt19937_64 rng(5);
  const std::string alphabet = "FileOpnCyWXVstgU _01";
  std::string text = kHttpHeader;
  std::size_t valid = 0;
  for (int i = 0; i < 500; ++i) {
    std::string act;
    const auto len = 3 + rng() % 12;
    for (std::size_t k = 0; k < len; ++k) act += alphabet[rng() % alphabet.size()];
    if (act == "WWW Visit" || act == "WWW Upload" || act == "WWW Download") ++valid;
    text += "{H" + std::to_string(i) + "},01/04/2010 10:00:00,E,P,u," + act + ",c\n";
  }
  const auto r = parse_text(SourceKind::http, text);
  CHECK(r.events.size() == valid);
  CHECK(r.stats.skipped == 500 - valid);
}

TEST_CASE("wrong header is a hard error naming the file kind") {
  try {
    parse_text(SourceKind::device, "Id,date,user,pc,activity\n");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("device.csv") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_text(SourceKind::logon, ""), DataError);
  // CERT's own column spellings are accepted.
  CHECK_NOTHROW(parse_text(SourceKind::logon, "id,date,user,pc,activity\n"));
}

TEST_CASE("quoted fields keep commas and doubled quotes") {
  std::vector<std::string> scratch;
  const auto f = split_csv_line(R"(a,"b,c","say ""hi""",,d)", scratch);
  REQUIRE(f.size() == 5);
  CHECK(f[1] == "b,c");
  CHECK(f[2] == "say \"hi\"");
  CHECK(f[3].empty());
  CHECK(f[4] == "d");
}

TEST_CASE("build_timelines partitions and sorts") {
  CHECK(build_timelines({}).empty());

  auto ev = [](std::string emp, const char* ts, SourceKind src, std::string id, int code) {
    return LogEvent{std::move(emp), "PC", *parse_log_timestamp(ts), ActivityCode(code), src,
                    std::move(id)};
  };
  std::vector<LogEvent> events = {
      ev("B", "01/04/2010 10:00:00", SourceKind::http, "h2", 21),
      ev("A", "01/04/2010 12:00:00", SourceKind::logon, "l2", 1),
      ev("A", "01/04/2010 09:00:00", SourceKind::logon, "l1", 2),
      ev("C", "01/04/2010 09:00:00", SourceKind::email, "m1", 5),
      ev("B", "01/04/2010 10:00:00", SourceKind::http, "h1", 21),
      ev("B", "01/04/2010 10:00:00", SourceKind::device, "d1", 3),
  };
  const auto t = build_timelines(events);
  REQUIRE(t.size() == 3);
  std::size_t total = 0;
  for (const auto& [id, tl] : t) {
    total += tl.events.size();
    for (const auto& e : tl.events) CHECK(e.employee == id);
    for (std::size_t i = 1; i < tl.events.size(); ++i) {
      CHECK(tl.events[i - 1].timestamp <= tl.events[i].timestamp);
    }
  }
  CHECK(total == events.size());
  CHECK(t.at("A").events[0].raw_id == "l1");
  // Same timestamp: device before http, then raw id.
  const auto& b = t.at("B").events;
  CHECK(b[0].raw_id == "d1");
  CHECK(b[1].raw_id == "h1");
  CHECK(b[2].raw_id == "h2");
}

TEST_CASE("event store round-trips and rejects damage") {
  const auto dir = oracle::scratch_dir("evstore");
  EventStore store;
  store.events.push_back({"EMP0001", "PC-1", *parse_log_timestamp("01/04/2010 08:00:00"),
                          ActivityCode(2), SourceKind::logon, "{L1}"});
  store.events.push_back({"EMP0002", "PC-2", *parse_log_timestamp("01/04/2010 09:00:00"),
                          ActivityCode(16), SourceKind::file, "{F1}"});
  store.emails.push_back({"a@x", {"b@x", "c@y"}, *parse_log_timestamp("01/04/2010 09:30:00")});
  store.stats[SourceKind::logon] = ParseStats{3, 1, 2, {}};
  write_event_store(store, dir / "e.bin");
  const EventStore back = read_event_store(dir / "e.bin");
  CHECK(back.events == store.events);
  CHECK(back.emails == store.emails);
  CHECK(back.stats.at(SourceKind::logon).skipped == 2);

  // Truncation and a bumped version are both rejected.
  const auto size = std::filesystem::file_size(dir / "e.bin");
  std::filesystem::resize_file(dir / "e.bin", size - 3);
  CHECK_THROWS_AS(read_event_store(dir / "e.bin"), DataError);
  write_event_store(store, dir / "e.bin");
  {
    std::fstream f(dir / "e.bin", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(8);
    const char v = 9;
    f.write(&v, 1);
  }
  CHECK_THROWS_AS(read_event_store(dir / "e.bin"), DataError);
  CHECK_THROWS_AS(read_event_store(dir / "missing.bin"), DataError);
}

TEST_CASE("ingest needs all five files") {
  const auto dir = oracle::scratch_dir("ingest_missing");
  std::ofstream(dir / "logon.csv") << kLogonHeader;
  CHECK_THROWS_AS(ingest_directory(dir), DataError);
}
