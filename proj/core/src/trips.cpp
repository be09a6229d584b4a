#include "ridecast/trips.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <ostream>
#include <unordered_map>

#include "ridecast/csv.hpp"
#include "ridecast/errors.hpp"

namespace ridecast {

namespace {

constexpr std::array<std::pair<const char*, const char*>, 12> kDefaultColumns = {{
    {"tripduration", "tripduration"},
    {"starttime", "starttime"},
    {"stoptime", "stoptime"},
    {"start_station_id", "start station id"},
    {"start_station_latitude", "start station latitude"},
    {"start_station_longitude", "start station longitude"},
    {"end_station_id", "end station id"},
    {"end_station_latitude", "end station latitude"},
    {"end_station_longitude", "end station longitude"},
    {"usertype", "usertype"},
    {"birth_year", "birth year"},
    {"gender", "gender"},
}};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool is_missing(std::string_view field) {
  auto t = trim(field);
  return t.empty() || t == "\\N" || t == "NULL" || t == "null" || t == "NA";
}

}  // namespace

std::vector<std::string> canonical_columns() {
  std::vector<std::string> names;
  names.reserve(kDefaultColumns.size());
  for (const auto& [name, spelled] : kDefaultColumns) {
    (void)spelled;
    names.emplace_back(name);
  }
  return names;
}

std::string ColumnMap::resolve(const std::string& canonical) const {
  auto it = overrides.find(canonical);
  if (it != overrides.end()) return it->second;
  for (const auto& [name, spelled] : kDefaultColumns) {
    if (canonical == name) return spelled;
  }
  throw InternalError("unknown canonical column: " + canonical);
}

std::vector<TripRecord> parse_trips(std::istream& in, const ColumnMap& columns,
                                    ParseReport& report) {
  CsvReader reader(in);
  std::vector<std::string> fields;
  if (!reader.next(fields)) {
    throw SchemaError("trip input is empty; expected a header row");
  }

  std::unordered_map<std::string, std::size_t> header;
  for (std::size_t i = 0; i < fields.size(); ++i) header.emplace(lower(trim(fields[i])), i);

  std::array<std::size_t, kDefaultColumns.size()> idx{};
  for (std::size_t c = 0; c < kDefaultColumns.size(); ++c) {
    std::string want = lower(columns.resolve(kDefaultColumns[c].first));
    auto it = header.find(want);
    if (it == header.end()) {
      throw SchemaError(std::string("trip input is missing required column \"") + want +
                        "\" (canonical name: " + kDefaultColumns[c].first + ")");
    }
    idx[c] = it->second;
  }
  enum Col {
    kDuration, kStart, kStop,
    kStartId, kStartLat, kStartLon,
    kEndId, kEndLat, kEndLon,
    kUserType, kBirthYear, kGender
  };

  std::vector<TripRecord> trips;
  while (reader.next(fields)) {
    if (fields.size() == 1 && trim(fields[0]).empty()) continue;  // blank line
    if (fields.size() <= *std::max_element(idx.begin(), idx.end())) {
      report.reject("bad_field_count");
      continue;
    }
    TripRecord t;

    auto duration = parse_double(fields[idx[kDuration]]);
    if (!duration || !(*duration > 0.0)) {
      report.reject("bad_duration");
      continue;
    }
    t.duration_s = *duration;

    auto start = parse_civil_datetime(trim(fields[idx[kStart]]));
    auto stop = parse_civil_datetime(trim(fields[idx[kStop]]));
    if (!start || !stop) {
      report.reject("bad_timestamp");
      continue;
    }
    if (*stop < *start) {
      report.reject("end_before_start");
      continue;
    }
    t.start_time = *start;
    t.end_time = *stop;

    auto lat1 = parse_double(fields[idx[kStartLat]]);
    auto lon1 = parse_double(fields[idx[kStartLon]]);
    auto lat2 = parse_double(fields[idx[kEndLat]]);
    auto lon2 = parse_double(fields[idx[kEndLon]]);
    auto lat_ok = [](std::optional<double> v) { return v && *v >= -90.0 && *v <= 90.0; };
    auto lon_ok = [](std::optional<double> v) { return v && *v >= -180.0 && *v <= 180.0; };
    if (!lat_ok(lat1) || !lon_ok(lon1) || !lat_ok(lat2) || !lon_ok(lon2)) {
      report.reject("bad_coordinate");
      continue;
    }
    t.start_lat = *lat1;
    t.start_lon = *lon1;
    t.end_lat = *lat2;
    t.end_lon = *lon2;

    std::string user = lower(trim(fields[idx[kUserType]]));
    if (user == "customer") {
      t.user_type = UserType::Customer;
    } else if (user == "subscriber") {
      t.user_type = UserType::Subscriber;
    } else {
      report.reject("bad_usertype");
      continue;
    }

    auto gender = parse_int(fields[idx[kGender]]);
    if (!gender || *gender < 0 || *gender > 2) {
      report.reject("bad_gender");
      continue;
    }
    t.gender = static_cast<Gender>(*gender);

    const std::string& by = fields[idx[kBirthYear]];
    if (is_missing(by)) {
      t.birth_year = std::nullopt;
    } else {
      auto year = parse_int(by);
      if (!year || *year < 1800 || *year > 2200) {
        report.reject("bad_birth_year");
        continue;
      }
      t.birth_year = static_cast<int>(*year);
    }

    t.start_station_id = trim(fields[idx[kStartId]]);
    t.end_station_id = trim(fields[idx[kEndId]]);

    trips.push_back(std::move(t));
    ++report.accepted;
  }
  return trips;
}

Period Period::of(PeriodTag tag) {
  if (tag == PeriodTag::PrePandemic) {
    return Period{tag, CivilDate{2019, 3, 1}, CivilDate{2020, 2, 29}};
  }
  return Period{tag, CivilDate{2020, 3, 1}, CivilDate{2021, 2, 28}};
}

const char* period_name(PeriodTag tag) {
  return tag == PeriodTag::PrePandemic ? "pre_pandemic" : "pandemic";
}

std::optional<PeriodTag> period_of_date(const CivilDate& d) {
  if (Period::of(PeriodTag::PrePandemic).contains(d)) return PeriodTag::PrePandemic;
  if (Period::of(PeriodTag::Pandemic).contains(d)) return PeriodTag::Pandemic;
  return std::nullopt;
}

std::vector<StationCount> station_counts(std::span<const TripRecord> trips) {
  std::map<std::string, StationCount> by_id;
  auto touch = [&](const std::string& id, double lat, double lon) -> StationCount& {
    auto [it, inserted] = by_id.try_emplace(id);
    if (inserted) {
      it->second.station_id = id;
      it->second.lat = lat;
      it->second.lon = lon;
    }
    return it->second;
  };
  for (const auto& t : trips) {
    touch(t.start_station_id, t.start_lat, t.start_lon).originated++;
    touch(t.end_station_id, t.end_lat, t.end_lon).terminated++;
  }
  std::vector<StationCount> out;
  out.reserve(by_id.size());
  for (auto& [id, count] : by_id) out.push_back(std::move(count));
  return out;
}

void write_station_counts_csv(std::ostream& out, std::span<const StationCount> counts) {
  out << "station_id,lat,lon,originated,terminated\n";
  for (const auto& s : counts) {
    out << s.station_id << ',' << format_double(s.lat) << ',' << format_double(s.lon) << ','
        << s.originated << ',' << s.terminated << '\n';
  }
}

}  // namespace ridecast
