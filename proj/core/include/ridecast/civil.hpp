#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace ridecast {

/// Calendar date in civil local time. No time zone, no DST arithmetic:
/// the pipeline keys everything by wall-clock values as they appear in
/// the source files.
struct CivilDate {
  int year = 0;
  int month = 1;  // 1-12
  int day = 1;    // 1-31

  auto operator<=>(const CivilDate&) const = default;

  /// ISO weekday code, 1 = Monday ... 7 = Sunday.
  int iso_weekday() const;

  /// Days since 1970-01-01 (proleptic Gregorian); negative before epoch.
  std::int64_t days_since_epoch() const;

  std::string to_string() const;  // YYYY-MM-DD
};

bool is_valid_date(int year, int month, int day);

/// Parses strict YYYY-MM-DD.
std::optional<CivilDate> parse_civil_date(std::string_view text);

/// Timestamp at minute-or-finer precision, civil local time.
struct CivilDateTime {
  CivilDate date;
  int hour = 0;    // 0-23
  int minute = 0;  // 0-59
  double second = 0.0;

  auto operator<=>(const CivilDateTime&) const = default;
};

/// Accepts "YYYY-MM-DD HH:MM", "YYYY-MM-DDTHH:MM", and either with
/// ":SS[.frac]" appended (the Citi Bike feed uses fractional seconds).
std::optional<CivilDateTime> parse_civil_datetime(std::string_view text);

/// One civil hour, the aggregation key for the whole pipeline.
struct HourKey {
  int year = 0;
  int month = 1;
  int day = 1;
  int hour = 0;

  auto operator<=>(const HourKey&) const = default;

  static HourKey of(const CivilDateTime& t) {
    return HourKey{t.date.year, t.date.month, t.date.day, t.hour};
  }

  CivilDate date() const { return CivilDate{year, month, day}; }

  /// Hours since 1970-01-01T00; used for gap arithmetic in the weather join.
  std::int64_t hours_since_epoch() const {
    return date().days_since_epoch() * 24 + hour;
  }

  std::string to_string() const;  // YYYY-MM-DDTHH
};

/// Parses strict YYYY-MM-DDTHH (the weather-file hour format).
std::optional<HourKey> parse_hour_key(std::string_view text);

}  // namespace ridecast
