#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ridecast/civil.hpp"

namespace ridecast {

enum class Gender { Unknown = 0, Male = 1, Female = 2 };
enum class UserType { Customer, Subscriber };

/// One bikeshare transaction from the trip feed.
struct TripRecord {
  double duration_s = 0.0;
  CivilDateTime start_time;
  CivilDateTime end_time;
  std::string start_station_id;
  std::string end_station_id;
  double start_lat = 0.0, start_lon = 0.0;
  double end_lat = 0.0, end_lon = 0.0;
  UserType user_type = UserType::Subscriber;
  Gender gender = Gender::Unknown;
  std::optional<int> birth_year;
};

/// Canonical column names understood by the parser, with their default
/// spellings in the Citi Bike legacy feed. A ColumnMap override renames
/// individual columns when the source header differs.
///
///   tripduration, starttime, stoptime,
///   start_station_id  -> "start station id"
///   start_station_latitude / start_station_longitude
///   end_station_id / end_station_latitude / end_station_longitude
///   usertype, birth_year -> "birth year", gender
struct ColumnMap {
  std::map<std::string, std::string> overrides;

  /// Actual header spelling for a canonical column.
  std::string resolve(const std::string& canonical) const;
};

/// The twelve canonical column names, in feed order.
std::vector<std::string> canonical_columns();

/// Reject accounting for a parse run. Records that fail type validation
/// are counted per reason rather than silently dropped.
struct ParseReport {
  std::size_t accepted = 0;
  std::map<std::string, std::size_t> rejected;

  std::size_t rejected_total() const {
    std::size_t n = 0;
    for (const auto& [reason, count] : rejected) n += count;
    return n;
  }
  void reject(const std::string& reason) { ++rejected[reason]; }
};

/// Parses a trip feed. The first row must be a header containing every
/// required column (after ColumnMap renaming); a missing column raises
/// SchemaError naming it. Malformed rows are counted in the report.
std::vector<TripRecord> parse_trips(std::istream& in, const ColumnMap& columns,
                                    ParseReport& report);

/// Study periods, split at the first reported COVID-19 case in New York
/// state (2020-03-01). Assigned by trip start date; both ends inclusive.
enum class PeriodTag { PrePandemic, Pandemic };

struct Period {
  PeriodTag tag = PeriodTag::PrePandemic;
  CivilDate begin;
  CivilDate end;

  bool contains(const CivilDate& d) const { return begin <= d && d <= end; }
  static Period of(PeriodTag tag);
};

const char* period_name(PeriodTag tag);
std::optional<PeriodTag> period_of_date(const CivilDate& d);

/// Per-station origin/destination totals for the mapping export.
struct StationCount {
  std::string station_id;
  double lat = 0.0, lon = 0.0;
  std::uint64_t originated = 0;
  std::uint64_t terminated = 0;
};

/// Totals over the given trips, sorted by station_id. Coordinates come
/// from the first trip that references each station.
std::vector<StationCount> station_counts(std::span<const TripRecord> trips);

void write_station_counts_csv(std::ostream& out, std::span<const StationCount> counts);

}  // namespace ridecast
