#include <doctest.h>

#include <set>

#include "lac/activity.hpp"
#include "lac/civil_time.hpp"
#include "lac/error.hpp"
#include "lac/random.hpp"

using namespace lac;

TEST_CASE("civil dates round-trip through day numbers") {
  CHECK(days_from_civil({1970, 1, 1}) == 0);
  CHECK(days_from_civil({2000, 3, 1}) == 11017);
  CHECK(days_from_civil({2010, 1, 4}) == 14613);
  for (std::int64_t d = -800000; d <= 800000; d += 997) {
    CHECK(days_from_civil(civil_from_days(d)) == d);
  }
}

TEST_CASE("weekday of known dates") {
  CHECK(weekday({1970, 1, 1}) == 3);  // Thursday
  CHECK(weekday({2010, 1, 4}) == 0);  // Monday
  CHECK(weekday({2024, 2, 29}) == 3);
  CHECK(weekday({1969, 12, 28}) == 6);  // Sunday before the epoch
}

TEST_CASE("date validity") {
  CHECK(is_valid_date({2024, 2, 29}));
  CHECK_FALSE(is_valid_date({2023, 2, 29}));
  CHECK_FALSE(is_valid_date({1900, 2, 29}));
  CHECK(is_valid_date({2000, 2, 29}));
  CHECK_FALSE(is_valid_date({2010, 13, 1}));
  CHECK_FALSE(is_valid_date({2010, 4, 31}));
}

TEST_CASE("log timestamps parse strictly") {
  const auto ts = parse_log_timestamp("01/02/2010 07:12:05");
  REQUIRE(ts);
  CHECK(date_of(*ts) == CivilDate{2010, 1, 2});
  const auto tod = time_of_day(*ts);
  CHECK(tod.hour == 7);
  CHECK(tod.minute == 12);
  CHECK(tod.second == 5);
  CHECK(format_log_timestamp(*ts) == "01/02/2010 07:12:05");

  CHECK_FALSE(parse_log_timestamp("1/02/2010 07:12:05"));
  CHECK_FALSE(parse_log_timestamp("01/02/2010 24:00:00"));
  CHECK_FALSE(parse_log_timestamp("01/02/2010 23:60:00"));
  CHECK_FALSE(parse_log_timestamp("02/30/2010 10:00:00"));
  CHECK_FALSE(parse_log_timestamp("01-02-2010 07:12:05"));
  CHECK_FALSE(parse_log_timestamp("01/02/2010 07:12:05 "));
  CHECK_FALSE(parse_log_timestamp(""));
}

TEST_CASE("iso dates") {
  CHECK(parse_iso_date("2010-01-04") == CivilDate{2010, 1, 4});
  CHECK_FALSE(parse_iso_date("2010-02-30"));
  CHECK_FALSE(parse_iso_date("2010/01/04"));
  CHECK(format_iso_date({2010, 1, 4}) == "2010-01-04");
}

TEST_CASE("activity table matches the published codes") {
  const std::pair<int, const char*> table[] = {
      {1, "Logoff"},           {2, "Logon"},             {3, "Connect"},
      {4, "Disconnect"},       {5, "Send"},              {6, "View"},
      {7, "File Copy_0_1_0"},  {8, "File Copy_0_1_1"},   {9, "File Copy_1_0_0"},
      {10, "File Copy_1_0_1"}, {11, "File Delete_0_1_0"}, {12, "File Delete_0_1_1"},
      {13, "File Open_0_0_0"}, {14, "File Open_0_0_1"},  {15, "File Open_0_1_0"},
      {16, "File Open_0_1_1"}, {17, "File Write_1_0_0"}, {18, "File Write_1_0_1"},
      {19, "WWW Download"},    {20, "WWW Upload"},       {21, "WWW Visit"}};
  std::set<std::string_view> names;
  for (const auto& [code, name] : table) {
    const ActivityCode a(code);
    CHECK(a.name() == name);
    names.insert(a.name());
    const auto back = activity_from_string(a.source(), name);
    REQUIRE(back);
    CHECK(back->value() == code);
  }
  CHECK(names.size() == 21);

  CHECK(ActivityCode(2).source() == SourceKind::logon);
  CHECK(ActivityCode(4).source() == SourceKind::device);
  CHECK(ActivityCode(6).source() == SourceKind::email);
  CHECK(ActivityCode(12).source() == SourceKind::file);
  CHECK(ActivityCode(20).source() == SourceKind::http);
}

TEST_CASE("activity codes outside 1..21 are rejected") {
  CHECK_THROWS_AS(ActivityCode(0), DataError);
  CHECK_THROWS_AS(ActivityCode(22), DataError);
  CHECK_FALSE(ActivityCode::try_make(-1));
  CHECK(ActivityCode::try_make(21));
}

TEST_CASE("activity strings must match the file kind exactly") {
  CHECK_FALSE(activity_from_string(SourceKind::http, "Logon"));
  CHECK_FALSE(activity_from_string(SourceKind::logon, "logon"));
  CHECK_FALSE(activity_from_string(SourceKind::file, "File Copy_0_0_0"));
  CHECK_FALSE(activity_from_string(SourceKind::file, "File Delete_1_0_0"));
  CHECK_FALSE(activity_from_string(SourceKind::email, "Send "));
}

TEST_CASE("file operation and flags give the suffixed code") {
  CHECK(file_activity_code(FileOperation::open, {false, false, false})->value() == 13);
  CHECK(file_activity_code(FileOperation::copy, {true, false, true})->value() == 10);
  CHECK(file_activity_code(FileOperation::write, {true, false, false})->value() == 17);
  CHECK_FALSE(file_activity_code(FileOperation::copy, {false, false, false}));
  CHECK_FALSE(file_activity_code(FileOperation::remove, {true, false, false}));
}

TEST_CASE("seeded generator is reproducible and in range") {
  Rng a(derive_seed(42, 3)), b(derive_seed(42, 3)), c(derive_seed(42, 4));
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.uniform_int(-3, 5);
    CHECK(x == b.uniform_int(-3, 5));
    CHECK(x >= -3);
    CHECK(x <= 5);
    differs |= c.next() != a.next();
    b.next();
  }
  CHECK(differs);
}
