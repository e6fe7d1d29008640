#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace lac {

struct CivilDate {
  int year = 1970;
  int month = 1;
  int day = 1;

  auto operator<=>(const CivilDate&) const = default;
};

/// Seconds since 1970-01-01 00:00:00, no time zone.
struct Timestamp {
  std::int64_t seconds = 0;

  auto operator<=>(const Timestamp&) const = default;
};

struct TimeOfDay {
  int hour = 0;
  int minute = 0;
  int second = 0;
};

std::int64_t days_from_civil(const CivilDate& date);
CivilDate civil_from_days(std::int64_t days);
bool is_valid_date(const CivilDate& date);

/// 0 = Monday ... 6 = Sunday.
int weekday(const CivilDate& date);

Timestamp make_timestamp(const CivilDate& date, int hour, int minute, int second);
CivilDate date_of(Timestamp ts);
TimeOfDay time_of_day(Timestamp ts);

/// Parses the log `date` column, `MM/DD/YYYY HH:MM:SS`.
std::optional<Timestamp> parse_log_timestamp(std::string_view text);
std::string format_log_timestamp(Timestamp ts);

/// `MM/DD/YYYY`
std::string format_log_date(const CivilDate& date);

/// ISO `YYYY-MM-DD`, used in configuration files.
std::optional<CivilDate> parse_iso_date(std::string_view text);
std::string format_iso_date(const CivilDate& date);

}  // namespace lac
