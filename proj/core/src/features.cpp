#include "ridecast/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

#include "ridecast/csv.hpp"
#include "ridecast/errors.hpp"
#include "ridecast/geo.hpp"

namespace ridecast {
namespace {

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

constexpr std::array<const char*, 5> kWeatherColumns = {
    "hour", "temperature_f", "precipitation_in", "humidity_pct", "wind_mph"};

}  // namespace

std::vector<WeatherObservation> read_weather_csv(std::istream& in) {
  CsvReader reader(in);
  std::vector<std::string> fields;
  if (!reader.next(fields))
    throw SchemaError("weather input is empty; expected a header row");
  if (fields.size() != kWeatherColumns.size())
    throw SchemaError("weather header has " + std::to_string(fields.size()) +
                      " columns, expected 5 (hour,temperature_f,precipitation_in,humidity_pct,wind_mph)");
  for (std::size_t i = 0; i < kWeatherColumns.size(); ++i) {
    if (ascii_lower(trim(fields[i])) != kWeatherColumns[i])
      throw SchemaError("weather header column " + std::to_string(i + 1) + " is '" +
                        fields[i] + "', expected '" + kWeatherColumns[i] + "'");
  }

  std::vector<WeatherObservation> out;
  std::unordered_map<std::int64_t, std::size_t> seen;  // later rows replace earlier ones
  std::size_t line = 1;
  while (reader.next(fields)) {
    ++line;
    if (fields.size() != kWeatherColumns.size())
      throw ParseError("weather row " + std::to_string(line) + ": expected 5 fields, got " +
                       std::to_string(fields.size()));
    WeatherObservation obs;
    auto key = parse_hour_key(trim(fields[0]));
    if (!key)
      throw ParseError("weather row " + std::to_string(line) + ": bad hour '" + fields[0] + "'");
    obs.hour = *key;
    double* slots[4] = {&obs.temperature_f, &obs.precipitation_in, &obs.humidity_pct,
                        &obs.wind_mph};
    for (int i = 0; i < 4; ++i) {
      auto v = parse_double(fields[i + 1]);
      if (!v)
        throw ParseError("weather row " + std::to_string(line) + ": bad " +
                         kWeatherColumns[i + 1] + " '" + fields[i + 1] + "'");
      *slots[i] = *v;
    }
    auto [it, inserted] = seen.emplace(obs.hour.hours_since_epoch(), out.size());
    if (inserted)
      out.push_back(obs);
    else
      out[it->second] = obs;
  }
  return out;
}

std::set<CivilDate> read_holidays(std::istream& in) {
  std::set<CivilDate> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    auto date = parse_civil_date(text);
    if (!date)
      throw ParseError("holiday file line " + std::to_string(lineno) + ": bad date '" +
                       std::string(text) + "'");
    out.insert(*date);
  }
  if (in.bad()) throw IoError("read error on holiday file");
  return out;
}

std::array<double, kFeatureCount> HourlyFeatureRow::features() const {
  return {hour_of_day,    day_of_week,   month,         pct_male,      pct_female,
          pct_age_16_24,  pct_age_25_44, pct_age_45_64, pct_age_65p,   pct_customer,
          pct_subscriber, avg_gcd_mi,    avg_duration_min, temperature_f, precipitation_in,
          humidity_pct,   wind_mph,      holiday};
}

AggregateResult aggregate_hourly(std::span<const TripRecord> trips, const Period& period) {
  struct Bucket {
    std::size_t n = 0;
    std::size_t male = 0, female = 0;
    std::size_t age_valid = 0, a16 = 0, a25 = 0, a45 = 0, a65 = 0;
    std::size_t customer = 0;
    double gcd_sum = 0.0;
    double duration_sum = 0.0;
  };
  std::map<HourKey, Bucket> buckets;

  AggregateResult result;
  for (const TripRecord& t : trips) {
    CivilDate start_date = t.start_time.date;
    if (!period.contains(start_date)) {
      ++result.out_of_period;
      continue;
    }
    ++result.accepted;
    Bucket& b = buckets[HourKey::of(t.start_time)];
    ++b.n;
    if (t.gender == Gender::Male) ++b.male;
    if (t.gender == Gender::Female) ++b.female;
    if (t.birth_year) {
      int age = start_date.year - *t.birth_year;
      if (age >= 16 && age <= 110) {
        ++b.age_valid;
        if (age <= 24)
          ++b.a16;
        else if (age <= 44)
          ++b.a25;
        else if (age <= 64)
          ++b.a45;
        else
          ++b.a65;
      }
    }
    if (t.user_type == UserType::Customer) ++b.customer;
    b.gcd_sum += haversine_gcd(t.start_lat, t.start_lon, t.end_lat, t.end_lon);
    b.duration_sum += t.duration_s / 60.0;
  }

  result.rows.reserve(buckets.size());
  for (const auto& [hour, b] : buckets) {
    HourlyFeatureRow row;
    row.hour = hour;
    row.demand = static_cast<double>(b.n);
    row.hour_of_day = hour.hour;
    row.day_of_week = hour.date().iso_weekday();
    row.month = hour.month;
    double n = static_cast<double>(b.n);
    row.pct_male = 100.0 * static_cast<double>(b.male) / n;
    row.pct_female = 100.0 * static_cast<double>(b.female) / n;
    if (b.age_valid > 0) {
      double av = static_cast<double>(b.age_valid);
      row.pct_age_16_24 = 100.0 * static_cast<double>(b.a16) / av;
      row.pct_age_25_44 = 100.0 * static_cast<double>(b.a25) / av;
      row.pct_age_45_64 = 100.0 * static_cast<double>(b.a45) / av;
      row.pct_age_65p = 100.0 * static_cast<double>(b.a65) / av;
    }
    row.pct_customer = 100.0 * static_cast<double>(b.customer) / n;
    row.pct_subscriber = 100.0 * static_cast<double>(b.n - b.customer) / n;
    row.avg_gcd_mi = b.gcd_sum / n;
    row.avg_duration_min = b.duration_sum / n;
    result.rows.push_back(row);
  }
  return result;
}

WeatherJoinResult join_weather(std::vector<HourlyFeatureRow> rows,
                               std::span<const WeatherObservation> observations) {
  std::map<std::int64_t, const WeatherObservation*> by_hour;
  for (const WeatherObservation& obs : observations)
    by_hour[obs.hour.hours_since_epoch()] = &obs;

  WeatherJoinResult result;
  result.rows.reserve(rows.size());
  for (HourlyFeatureRow& row : rows) {
    std::int64_t h = row.hour.hours_since_epoch();
    const WeatherObservation* match = nullptr;
    // upper_bound(h) - 1 is the latest observation at or before h.
    auto it = by_hour.upper_bound(h);
    if (it != by_hour.begin()) {
      --it;
      if (h - it->first <= kWeatherLookbackHours) match = it->second;
    }
    if (!match) {
      result.incomplete.push_back(row.hour);
      continue;
    }
    row.temperature_f = match->temperature_f;
    row.precipitation_in = match->precipitation_in;
    row.humidity_pct = match->humidity_pct;
    row.wind_mph = match->wind_mph;
    row.weather_set = true;
    result.rows.push_back(std::move(row));
  }
  return result;
}

void flag_holidays(std::vector<HourlyFeatureRow>& rows, const std::set<CivilDate>& holidays) {
  for (HourlyFeatureRow& row : rows)
    row.holiday = holidays.count(row.hour.date()) ? 1.0 : 0.0;
}

std::vector<VariableStats> descriptive_stats(const Dataset& data) {
  if (data.n_rows == 0) throw ValidationError("descriptive stats need at least one row");
  const std::size_t n_vars = 1 + data.n_cols;
  std::vector<VariableStats> stats(n_vars);
  stats[0].name = kTargetName;
  for (std::size_t j = 0; j < data.n_cols; ++j)
    stats[j + 1].name = j < data.feature_names.size() ? data.feature_names[j]
                                                      : "f" + std::to_string(j);

  std::vector<double> values(data.n_rows);
  for (std::size_t v = 0; v < n_vars; ++v) {
    for (std::size_t i = 0; i < data.n_rows; ++i)
      values[i] = v == 0 ? data.y[i] : data.at(i, v - 1);
    double sum = 0.0;
    for (double x : values) sum += x;
    double mean = sum / static_cast<double>(values.size());
    double ss = 0.0;
    for (double x : values) ss += (x - mean) * (x - mean);
    stats[v].mean = mean;
    stats[v].sd = values.size() > 1
                      ? std::sqrt(ss / static_cast<double>(values.size() - 1))
                      : 0.0;
    stats[v].min = *std::min_element(values.begin(), values.end());
    stats[v].max = *std::max_element(values.begin(), values.end());
  }
  return stats;
}

void write_stats_csv(std::ostream& out, std::span<const VariableStats> stats) {
  out << "variable,mean,sd,min,max\n";
  for (const VariableStats& s : stats) {
    out << s.name << ',' << format_double(s.mean) << ',' << format_double(s.sd) << ','
        << format_double(s.min) << ',' << format_double(s.max) << '\n';
  }
  if (!out) throw IoError("write error on stats output");
}

Dataset Dataset::select(std::span<const std::size_t> rows) const {
  Dataset out;
  out.feature_names = feature_names;
  out.n_rows = rows.size();
  out.n_cols = n_cols;
  out.x.resize(out.n_rows * n_cols);
  out.y.resize(out.n_rows);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::size_t r = rows[i];
    if (r >= n_rows) throw InternalError("row index out of range in Dataset::select");
    std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(r * n_cols), n_cols,
                out.x.begin() + static_cast<std::ptrdiff_t>(i * n_cols));
    out.y[i] = y[r];
  }
  return out;
}

Dataset to_dataset(std::span<const HourlyFeatureRow> rows) {
  Dataset d;
  d.feature_names.assign(kFeatureNames.begin(), kFeatureNames.end());
  d.n_rows = rows.size();
  d.n_cols = kFeatureCount;
  d.x.resize(d.n_rows * d.n_cols);
  d.y.resize(d.n_rows);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto f = rows[i].features();
    std::copy(f.begin(), f.end(), d.x.begin() + static_cast<std::ptrdiff_t>(i * d.n_cols));
    d.y[i] = rows[i].demand;
  }
  return d;
}

namespace {

std::string matrix_header() {
  std::string h = kTargetName;
  for (const char* name : kFeatureNames) {
    h += ',';
    h += name;
  }
  return h;
}

long long as_count(double v) { return std::llround(v); }

}  // namespace

void write_matrix_csv(std::ostream& out, std::span<const HourlyFeatureRow> rows) {
  out << matrix_header() << '\n';
  for (const HourlyFeatureRow& r : rows) {
    out << as_count(r.demand) << ',' << as_count(r.hour_of_day) << ','
        << as_count(r.day_of_week) << ',' << as_count(r.month) << ','
        << format_fixed(r.pct_male, 2) << ',' << format_fixed(r.pct_female, 2) << ','
        << format_fixed(r.pct_age_16_24, 2) << ',' << format_fixed(r.pct_age_25_44, 2) << ','
        << format_fixed(r.pct_age_45_64, 2) << ',' << format_fixed(r.pct_age_65p, 2) << ','
        << format_fixed(r.pct_customer, 2) << ',' << format_fixed(r.pct_subscriber, 2) << ','
        << format_fixed(r.avg_gcd_mi, 4) << ',' << format_fixed(r.avg_duration_min, 2) << ','
        << format_double(r.temperature_f) << ',' << format_double(r.precipitation_in) << ','
        << format_double(r.humidity_pct) << ',' << format_double(r.wind_mph) << ','
        << as_count(r.holiday) << '\n';
  }
  if (!out) throw IoError("write error on matrix output");
}

Dataset load_matrix_csv(std::istream& in) {
  CsvReader reader(in);
  std::vector<std::string> fields;
  if (!reader.next(fields))
    throw SchemaError("matrix input is empty; expected a header row");
  const std::size_t n_cols = 1 + kFeatureCount;
  if (fields.size() != n_cols)
    throw SchemaError("matrix header has " + std::to_string(fields.size()) +
                      " columns, expected " + std::to_string(n_cols));
  if (trim(fields[0]) != kTargetName)
    throw SchemaError("matrix column 1 is '" + fields[0] + "', expected '" + kTargetName + "'");
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    if (trim(fields[j + 1]) != kFeatureNames[j])
      throw SchemaError("matrix column " + std::to_string(j + 2) + " is '" + fields[j + 1] +
                        "', expected '" + kFeatureNames[j] + "'");
  }

  Dataset d;
  d.feature_names.assign(kFeatureNames.begin(), kFeatureNames.end());
  d.n_cols = kFeatureCount;
  std::size_t line = 1;
  while (reader.next(fields)) {
    ++line;
    if (fields.size() != n_cols)
      throw ParseError("matrix row " + std::to_string(line) + ": expected " +
                       std::to_string(n_cols) + " fields, got " + std::to_string(fields.size()));
    for (std::size_t j = 0; j < n_cols; ++j) {
      auto v = parse_double(fields[j]);
      if (!v)
        throw ParseError("matrix row " + std::to_string(line) + ": bad value '" + fields[j] +
                         "' in column " + std::to_string(j + 1));
      if (j == 0)
        d.y.push_back(*v);
      else
        d.x.push_back(*v);
    }
    ++d.n_rows;
  }
  return d;
}

void write_incomplete_hours_csv(std::ostream& out, std::span<const HourKey> hours) {
  out << "hour\n";
  for (const HourKey& h : hours) out << h.to_string() << '\n';
  if (!out) throw IoError("write error on incomplete-hours output");
}

}  // namespace ridecast
