#pragma once

#include <array>
#include <iosfwd>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ridecast/civil.hpp"
#include "ridecast/trips.hpp"

namespace ridecast {

/// One row of the hourly weather feed.
struct WeatherObservation {
  HourKey hour;
  double temperature_f = 0.0;
  double precipitation_in = 0.0;
  double humidity_pct = 0.0;
  double wind_mph = 0.0;
};

/// Reads the weather CSV (`hour,temperature_f,precipitation_in,humidity_pct,wind_mph`,
/// hour formatted YYYY-MM-DDTHH). Throws SchemaError on a bad header and
/// ParseError on a malformed row. When the same hour appears twice the
/// last row wins.
std::vector<WeatherObservation> read_weather_csv(std::istream& in);

/// Reads one YYYY-MM-DD date per line; blank lines and '#' comments skipped.
std::set<CivilDate> read_holidays(std::istream& in);

/// Names of the 18 explanatory variables, in matrix column order.
inline constexpr std::array<const char*, 18> kFeatureNames = {
    "hour_of_day",    "day_of_week",      "month",
    "pct_male",       "pct_female",       "pct_age_16_24",
    "pct_age_25_44",  "pct_age_45_64",    "pct_age_65p",
    "pct_customer",   "pct_subscriber",   "avg_gcd_mi",
    "avg_duration_min", "temperature_f",  "precipitation_in",
    "humidity_pct",   "wind_mph",         "holiday",
};
inline constexpr const char* kTargetName = "demand";
inline constexpr std::size_t kFeatureCount = kFeatureNames.size();

/// One training sample: citywide demand for a civil hour plus the 18
/// explanatory variables. Gender shares keep unknown-gender trips in the
/// denominator (they may sum below 100); the four age-group shares are
/// taken over trips with a usable age and sum to 100.
struct HourlyFeatureRow {
  HourKey hour;
  double demand = 0.0;
  double hour_of_day = 0.0;
  double day_of_week = 0.0;  // 1 = Monday ... 7 = Sunday
  double month = 0.0;        // 1 = January
  double pct_male = 0.0, pct_female = 0.0;
  double pct_age_16_24 = 0.0, pct_age_25_44 = 0.0;
  double pct_age_45_64 = 0.0, pct_age_65p = 0.0;
  double pct_customer = 0.0, pct_subscriber = 0.0;
  double avg_gcd_mi = 0.0;
  double avg_duration_min = 0.0;
  double temperature_f = 0.0, precipitation_in = 0.0;
  double humidity_pct = 0.0, wind_mph = 0.0;
  double holiday = 0.0;
  bool weather_set = false;

  std::array<double, kFeatureCount> features() const;
};

struct AggregateResult {
  std::vector<HourlyFeatureRow> rows;  // chronological, one per hour with >= 1 trip
  std::size_t accepted = 0;
  std::size_t out_of_period = 0;
};

/// Buckets trips into civil hours by start time and computes shares and
/// averages. Hours without trips produce no row. Trips outside the period
/// are rejected with a count. Weather and holiday fields are left unset.
AggregateResult aggregate_hourly(std::span<const TripRecord> trips, const Period& period);

struct WeatherJoinResult {
  std::vector<HourlyFeatureRow> rows;     // weather fields set
  std::vector<HourKey> incomplete;        // no observation within the window
};

/// Maximum lookback when an hour has no exact weather observation.
inline constexpr int kWeatherLookbackHours = 6;

/// Attaches weather to each row: exact hour match when present, otherwise
/// the most recent prior observation up to 6 hours back. Rows with no
/// usable observation are listed as incomplete and excluded.
WeatherJoinResult join_weather(std::vector<HourlyFeatureRow> rows,
                               std::span<const WeatherObservation> observations);

/// Sets holiday = 1 on every row whose date is in the set.
void flag_holidays(std::vector<HourlyFeatureRow>& rows, const std::set<CivilDate>& holidays);

/// Dense training matrix: 18 feature columns in kFeatureNames order plus
/// the demand target.
struct Dataset {
  std::vector<std::string> feature_names;
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<double> x;  // row-major, n_rows * n_cols
  std::vector<double> y;

  double at(std::size_t row, std::size_t col) const { return x[row * n_cols + col]; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(x).subspan(r * n_cols, n_cols);
  }
  Dataset select(std::span<const std::size_t> rows) const;
};

Dataset to_dataset(std::span<const HourlyFeatureRow> rows);

/// Per-variable summary over the matrix, in matrix column order
/// (demand first). sd is the sample standard deviation (n-1); a single
/// row yields sd = 0.
struct VariableStats {
  std::string name;
  double mean = 0.0, sd = 0.0, min = 0.0, max = 0.0;
};

std::vector<VariableStats> descriptive_stats(const Dataset& data);
void write_stats_csv(std::ostream& out, std::span<const VariableStats> stats);

/// Writes the matrix CSV. The header is fixed to the 19 field names,
/// demand first. Shares carry two decimals, GCD four, duration two;
/// weather fields round-trip the parsed input values exactly.
void write_matrix_csv(std::ostream& out, std::span<const HourlyFeatureRow> rows);

/// Reads a matrix CSV back; the header must match the canonical 19
/// columns exactly, else SchemaError.
Dataset load_matrix_csv(std::istream& in);

void write_incomplete_hours_csv(std::ostream& out, std::span<const HourKey> hours);

}  // namespace ridecast
