#include <doctest.h>

#include <random>

#include "lac/error.hpp"
#include "lac/features.hpp"

using namespace lac;

namespace {

// Independent bit string: each field printed MSB first with its width.
std::string expected_bits(int h, int m, int s, int a) {
  auto field = [](int v, int width) {
    std::string out;
    for (int b = width - 1; b >= 0; --b) out += ((v >> b) & 1) ? '1' : '0';
    return out;
  };
  return field(h, 5) + field(m, 6) + field(s, 6) + field(a, 5);
}

LogEvent event_at(std::string emp, const char* ts, int code, SourceKind src, std::string id) {
  return LogEvent{std::move(emp), "PC", *parse_log_timestamp(ts), ActivityCode(code), src,
                  std::move(id)};
}

}  // namespace

TEST_CASE("encode examples") {
  CHECK(encode_fields({0, 0, 0, 1}).to_string() == "0000000000000000000001");
  CHECK(encode_fields({23, 59, 59, 21}).to_string() == "1011111101111101110101");
  CHECK(encode_fields({9, 30, 15, 2}).to_string() == "0100101111000111100010");
  CHECK(encode_fields({23, 59, 59, 21}).to_string() == expected_bits(23, 59, 59, 21));
}

TEST_CASE("bit 0 is the most significant hour bit") {
  const auto v = encode_fields({16, 0, 0, 1});
  CHECK(v.bit(0));
  for (std::size_t i = 1; i < 21; ++i) CHECK_FALSE(v.bit(i));
  CHECK(v.bit(21));
}

TEST_CASE("decode rejects out-of-range fields") {
  CHECK_THROWS_AS(decode_vector(FeatureVector::from_raw(0)), DataError);
  // Minute field 111100 = 60.
  const std::uint32_t minute60 = (0u << 17) | (60u << 11) | (0u << 5) | 1u;
  CHECK_THROWS_AS(decode_vector(FeatureVector::from_raw(minute60)), DataError);
  const std::uint32_t hour24 = (24u << 17) | 1u;
  CHECK_THROWS_AS(decode_vector(FeatureVector::from_raw(hour24)), DataError);
  const std::uint32_t second62 = (62u << 5) | 1u;
  CHECK_THROWS_AS(decode_vector(FeatureVector::from_raw(second62)), DataError);
  CHECK_THROWS_AS(decode_vector(FeatureVector::from_raw(22u)), DataError);
  CHECK_THROWS_AS(encode_fields({0, 0, 0, 0}), DataError);
  CHECK_THROWS_AS(encode_fields({0, 60, 0, 1}), DataError);
}

TEST_CASE("round trip over boundary values and every activity") {
  const int hours[] = {0, 1, 11, 12, 22, 23};
  const int mins[] = {0, 1, 30, 58, 59};
  std::size_t checked = 0;
  for (int a = 1; a <= 21; ++a) {
    for (int h : hours) {
      for (int m : mins) {
        for (int s : mins) {
          const EventFields f{h, m, s, a};
          const auto v = encode_fields(f);
          CHECK(v.to_string() == expected_bits(h, m, s, a));
          CHECK(decode_vector(v) == f);
          ++checked;
        }
      }
    }
  }
  CHECK(checked == 21 * 6 * 5 * 5);
}

TEST_CASE("exhaustive round trip over all valid tuples") {
  std::size_t failures = 0;
  for (int h = 0; h < 24; ++h)
    for (int m = 0; m < 60; ++m)
      for (int s = 0; s < 60; ++s)
        for (int a = 1; a <= 21; ++a) {
          const EventFields f{h, m, s, a};
          if (!(decode_vector(encode_fields(f)) == f)) ++failures;
        }
  CHECK(failures == 0);
}

TEST_CASE("every invalid raw pattern is rejected") {
  std::size_t accepted = 0;
  for (std::uint32_t raw = 0; raw < (1u << 22); ++raw) {
    const std::uint32_t h = raw >> 17, m = (raw >> 11) & 63, s = (raw >> 5) & 63, a = raw & 31;
    const bool valid = h < 24 && m < 60 && s < 60 && a >= 1 && a <= 21;
    bool ok = true;
    try {
      decode_vector(FeatureVector::from_raw(raw));
    } catch (const DataError&) {
      ok = false;
    }
    CHECK_MESSAGE(ok == valid, "raw " << raw);
    if (ok) ++accepted;
    if (ok != valid) break;
  }
  CHECK(accepted == 24u * 60 * 60 * 21);
}

TEST_CASE("sequence rows decode to the timeline tuples") {
  CHECK(build_sequence(Timeline{"E", {}}).empty());

  Timeline t{"E",
             {event_at("E", "01/04/2010 08:45:10", 2, SourceKind::logon, "a"),
              event_at("E", "01/04/2010 09:00:00", 21, SourceKind::http, "b"),
              event_at("E", "01/05/2010 17:30:59", 1, SourceKind::logon, "c")}};
  const auto seq = build_sequence(t);
  REQUIRE(seq.size() == 3);
  REQUIRE(seq.provenance.size() == 3);
  CHECK(decode_vector(seq.rows[0]) == EventFields{8, 45, 10, 2});
  CHECK(decode_vector(seq.rows[1]) == EventFields{9, 0, 0, 21});
  CHECK(decode_vector(seq.rows[2]) == EventFields{17, 30, 59, 1});

  const Eigen::MatrixXd x = seq.to_matrix();
  CHECK(x.rows() == 22);
  CHECK(x.cols() == 3);
  for (Eigen::Index c = 0; c < 3; ++c)
    for (Eigen::Index r = 0; r < 22; ++r)
      CHECK(x(r, c) == (seq.rows[c].bit(r) ? 1.0 : 0.0));
}

TEST_CASE("interleave merges globally and projects back per employee") {
  std::mt19937_64 rng(11);
  std::vector<Timeline> owned;
  for (const char* id : {"A", "B", "C"}) {
    std::vector<LogEvent> ev;
    const auto n = 5 + rng() % 20;
    for (std::size_t i = 0; i < n; ++i) {
      const auto sec = 1262600000 + static_cast<std::int64_t>(rng() % 5000);
      ev.push_back(LogEvent{id, "PC", Timestamp{sec}, ActivityCode(1 + static_cast<int>(rng() % 21)),
                            SourceKind::http, std::to_string(i)});
    }
    owned.push_back(build_timelines(ev).begin()->second);
  }
  std::vector<const Timeline*> ptrs;
  for (const auto& t : owned) ptrs.push_back(&t);
  const auto merged = interleave_community(ptrs);

  std::size_t total = 0;
  for (const auto& t : owned) total += t.events.size();
  REQUIRE(merged.size() == total);
  for (std::size_t i = 1; i < merged.size(); ++i) {
    CHECK(merged.provenance[i - 1].timestamp <= merged.provenance[i].timestamp);
  }
  for (const auto& t : owned) {
    const auto own = build_sequence(t);
    const auto rows = merged.rows_of(t.employee);
    REQUIRE(rows.size() == own.size());
    for (std::size_t k = 0; k < rows.size(); ++k) CHECK(merged.rows[rows[k]] == own.rows[k]);
  }

  const Timeline* one[] = {&owned[1]};
  const auto single = interleave_community(one);
  CHECK(single.rows == build_sequence(owned[1]).rows);
}

TEST_CASE("slice keeps rows and provenance aligned") {
  Timeline t{"E", {}};
  for (int i = 0; i < 10; ++i)
    t.events.push_back(LogEvent{"E", "PC", Timestamp{1262600000 + i}, ActivityCode(1 + i),
                                SourceKind::logon, std::to_string(i)});
  const auto seq = build_sequence(t);
  const auto tail = seq.slice(7, 10);
  REQUIRE(tail.size() == 3);
  CHECK(tail.provenance.size() == 3);
  CHECK(decode_vector(tail.rows[0]).activity == 8);
  CHECK(tail.provenance[2].raw_id == "9");
}
