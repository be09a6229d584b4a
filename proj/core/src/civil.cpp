#include "ridecast/civil.hpp"

#include <array>
#include <charconv>
#include <chrono>
#include <cstdio>

namespace ridecast {

namespace {

bool is_leap(int year) {
  return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
}

int days_in_month(int year, int month) {
  static constexpr std::array<int, 12> kDays = {31, 28, 31, 30, 31, 30,
                                                31, 31, 30, 31, 30, 31};
  if (month == 2 && is_leap(year)) return 29;
  return kDays[static_cast<std::size_t>(month - 1)];
}

// Parses an unsigned integer of exactly `width` digits at text[pos..].
bool fixed_digits(std::string_view text, std::size_t pos, std::size_t width, int& out) {
  if (text.size() < pos + width) return false;
  int value = 0;
  for (std::size_t i = 0; i < width; ++i) {
    char c = text[pos + i];
    if (c < '0' || c > '9') return false;
    value = value * 10 + (c - '0');
  }
  out = value;
  return true;
}

}  // namespace

bool is_valid_date(int year, int month, int day) {
  if (year < 1678 || year > 2261) return false;  // sys_days comfort zone
  if (month < 1 || month > 12) return false;
  return day >= 1 && day <= days_in_month(year, month);
}

int CivilDate::iso_weekday() const {
  using namespace std::chrono;
  year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                     std::chrono::day{static_cast<unsigned>(day)}};
  weekday wd{sys_days{ymd}};
  return static_cast<int>(wd.iso_encoding());
}

std::int64_t CivilDate::days_since_epoch() const {
  using namespace std::chrono;
  year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                     std::chrono::day{static_cast<unsigned>(day)}};
  return sys_days{ymd}.time_since_epoch().count();
}

std::string CivilDate::to_string() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
  return buf;
}

std::optional<CivilDate> parse_civil_date(std::string_view text) {
  int y, m, d;
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  if (!fixed_digits(text, 0, 4, y) || !fixed_digits(text, 5, 2, m) ||
      !fixed_digits(text, 8, 2, d)) {
    return std::nullopt;
  }
  if (!is_valid_date(y, m, d)) return std::nullopt;
  return CivilDate{y, m, d};
}

std::optional<CivilDateTime> parse_civil_datetime(std::string_view text) {
  if (text.size() < 16) return std::nullopt;
  auto date = parse_civil_date(text.substr(0, 10));
  if (!date) return std::nullopt;
  if (text[10] != ' ' && text[10] != 'T') return std::nullopt;
  int hh, mm;
  if (!fixed_digits(text, 11, 2, hh) || text[13] != ':' || !fixed_digits(text, 14, 2, mm)) {
    return std::nullopt;
  }
  if (hh > 23 || mm > 59) return std::nullopt;
  double sec = 0.0;
  if (text.size() > 16) {
    if (text[16] != ':') return std::nullopt;
    std::string_view rest = text.substr(17);
    if (rest.empty()) return std::nullopt;
    auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), sec);
    if (ec != std::errc{} || ptr != rest.data() + rest.size()) return std::nullopt;
    if (sec < 0.0 || sec >= 60.0) return std::nullopt;
  }
  return CivilDateTime{*date, hh, mm, sec};
}

std::string HourKey::to_string() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d", year, month, day, hour);
  return buf;
}

std::optional<HourKey> parse_hour_key(std::string_view text) {
  if (text.size() != 13 || text[10] != 'T') return std::nullopt;
  auto date = parse_civil_date(text.substr(0, 10));
  if (!date) return std::nullopt;
  int hh;
  if (!fixed_digits(text, 11, 2, hh) || hh > 23) return std::nullopt;
  return HourKey{date->year, date->month, date->day, hh};
}

}  // namespace ridecast
