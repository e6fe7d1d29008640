#include "lac/civil_time.hpp"

#include <charconv>
#include <cstdio>

namespace lac {

namespace {

constexpr std::int64_t kSecondsPerDay = 86400;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

bool parse_fixed(std::string_view text, std::size_t pos, std::size_t width,
                 int& out) {
  if (pos + width > text.size()) return false;
  for (std::size_t i = pos; i < pos + width; ++i) {
    if (text[i] < '0' || text[i] > '9') return false;
  }
  auto res = std::from_chars(text.data() + pos, text.data() + pos + width, out);
  return res.ec == std::errc{};
}

}  // namespace

// Howard Hinnant's days_from_civil / civil_from_days.
std::int64_t days_from_civil(const CivilDate& date) {
  std::int64_t y = date.year;
  const int m = date.month;
  const int d = date.day;
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const std::int64_t yoe = y - era * 400;
  const std::int64_t doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
  const std::int64_t doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + doe - 719468;
}

CivilDate civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const std::int64_t doe = z - era * 146097;
  const std::int64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = yoe + era * 400;
  const std::int64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const std::int64_t mp = (5 * doy + 2) / 153;
  const int d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  const int m = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
  return CivilDate{static_cast<int>(y + (m <= 2)), m, d};
}

bool is_valid_date(const CivilDate& date) {
  if (date.month < 1 || date.month > 12 || date.day < 1) return false;
  return civil_from_days(days_from_civil(date)) == date;
}

int weekday(const CivilDate& date) {
  // 1970-01-01 was a Thursday (index 3).
  const std::int64_t days = days_from_civil(date) + 3;
  return static_cast<int>(days - floor_div(days, 7) * 7);
}

Timestamp make_timestamp(const CivilDate& date, int hour, int minute,
                         int second) {
  return Timestamp{days_from_civil(date) * kSecondsPerDay + hour * 3600 +
                   minute * 60 + second};
}

CivilDate date_of(Timestamp ts) {
  return civil_from_days(floor_div(ts.seconds, kSecondsPerDay));
}

TimeOfDay time_of_day(Timestamp ts) {
  const std::int64_t secs =
      ts.seconds - floor_div(ts.seconds, kSecondsPerDay) * kSecondsPerDay;
  return TimeOfDay{static_cast<int>(secs / 3600),
                   static_cast<int>((secs / 60) % 60),
                   static_cast<int>(secs % 60)};
}

std::optional<Timestamp> parse_log_timestamp(std::string_view text) {
  // MM/DD/YYYY HH:MM:SS
  if (text.size() != 19 || text[2] != '/' || text[5] != '/' ||
      text[10] != ' ' || text[13] != ':' || text[16] != ':') {
    return std::nullopt;
  }
  CivilDate date;
  int hour = 0, minute = 0, second = 0;
  if (!parse_fixed(text, 0, 2, date.month) || !parse_fixed(text, 3, 2, date.day) ||
      !parse_fixed(text, 6, 4, date.year) || !parse_fixed(text, 11, 2, hour) ||
      !parse_fixed(text, 14, 2, minute) || !parse_fixed(text, 17, 2, second)) {
    return std::nullopt;
  }
  if (!is_valid_date(date) || hour > 23 || minute > 59 || second > 59) {
    return std::nullopt;
  }
  return make_timestamp(date, hour, minute, second);
}

std::string format_log_timestamp(Timestamp ts) {
  const CivilDate d = date_of(ts);
  const TimeOfDay t = time_of_day(ts);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%02d/%02d/%04d %02d:%02d:%02d", d.month,
                d.day, d.year, t.hour, t.minute, t.second);
  return buf;
}

std::string format_log_date(const CivilDate& date) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d/%02d/%04d", date.month, date.day,
                date.year);
  return buf;
}

std::optional<CivilDate> parse_iso_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  CivilDate date;
  if (!parse_fixed(text, 0, 4, date.year) || !parse_fixed(text, 5, 2, date.month) ||
      !parse_fixed(text, 8, 2, date.day) || !is_valid_date(date)) {
    return std::nullopt;
  }
  return date;
}

std::string format_iso_date(const CivilDate& date) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", date.year, date.month,
                date.day);
  return buf;
}

}  // namespace lac
