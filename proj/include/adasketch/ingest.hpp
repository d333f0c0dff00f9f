#pragma once

// Rasterizes point events (timestamp, latitude, longitude, optional count)
// into a (time, cell, cell) count tensor.  Cells use half-open intervals
// [low, low + cell_size): an event exactly on an interior boundary belongs to
// the cell whose lower edge it sits on, and events on or past the upper grid
// edge are dropped.  Mode 2 indexes the longitude axis and mode 3 the
// latitude axis, which reproduces the usual published (time, 120, 200) shape
// for the NYC extent at a 0.001 degree cell.

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "adasketch/common.hpp"
#include "adasketch/tensor.hpp"

namespace adasketch {

struct EventRecord {
  double epoch_seconds = 0;
  double latitude = 0;
  double longitude = 0;
  double count = 1;
};

struct GridSpec {
  double lat_min = 40.66;
  double lat_max = 40.86;
  double lon_min = -74.03;
  double lon_max = -73.91;
  double cell_degrees = 0.001;

  void validate() const {
    require(lat_max > lat_min && lon_max > lon_min, "grid: empty extent");
    require(cell_degrees > 0, "grid: cell size must be positive");
  }

  Index lat_cells() const {
    return static_cast<Index>(std::ceil((lat_max - lat_min) / cell_degrees - 1e-9));
  }
  Index lon_cells() const {
    return static_cast<Index>(std::ceil((lon_max - lon_min) / cell_degrees - 1e-9));
  }
};

struct IngestStats {
  Index accepted = 0;
  Index out_of_grid = 0;
  Index unparseable = 0;
  double epoch_start = 0;  // epoch seconds of time bin 0
};

namespace detail {

/// Days since 1970-01-01 for a civil date (proleptic Gregorian).
inline long long days_from_civil(long long y, int m, int d) {
  y -= m <= 2;
  const long long era = (y >= 0 ? y : y - 399) / 400;
  const long long yoe = y - era * 400;
  const long long doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const long long doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + doe - 719468;
}

/// Accepts epoch seconds or ISO-8601 (date, or date plus "T"/" " time).
inline std::optional<double> parse_timestamp(const std::string& field) {
  if (field.empty()) return std::nullopt;
  bool numeric = true;
  for (char c : field)
    if (!std::isdigit(static_cast<unsigned char>(c)) && c != '.' && c != '-' && c != '+')
      numeric = false;
  if (numeric && field.find('-', 1) == std::string::npos) {
    try {
      std::size_t used = 0;
      const double v = std::stod(field, &used);
      if (used == field.size()) return v;
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  int year, month, day, hour = 0, minute = 0;
  double second = 0;
  char sep;
  if (std::sscanf(field.c_str(), "%d-%d-%d%c%d:%d:%lf", &year, &month, &day, &sep, &hour,
                  &minute, &second) >= 3) {
    if (month < 1 || month > 12 || day < 1 || day > 31) return std::nullopt;
    return static_cast<double>(days_from_civil(year, month, day)) * 86400.0 + hour * 3600.0 +
           minute * 60.0 + second;
  }
  return std::nullopt;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream stream(line);
  while (std::getline(stream, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    std::size_t start = 0;
    while (start < field.size() && field[start] == ' ') ++start;
    fields.push_back(field.substr(start));
  }
  return fields;
}

inline std::string lowercase(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline int find_column(const std::vector<std::string>& header,
                       const std::vector<std::string>& names) {
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string h = lowercase(header[c]);
    for (const auto& name : names)
      if (h == name) return static_cast<int>(c);
  }
  return -1;
}

}  // namespace detail

/// Parses the CSV (header row required) and counts events per
/// (time bin, lon cell, lat cell).  Unparseable rows are skipped and counted;
/// a file with no parseable rows is an input error.  The time extent is
/// data-driven: bin 0 starts at the earliest in-grid event.
template <typename Scalar>
std::pair<DenseTensor<Scalar>, IngestStats> ingest_csv(const std::string& path,
                                                       const GridSpec& grid,
                                                       double bin_seconds) {
  grid.validate();
  require(bin_seconds > 0, "ingest: bin width must be positive");
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path + " for reading");

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  const auto header = detail::split_csv_line(line);
  const int time_col = detail::find_column(
      header, {"timestamp", "time", "datetime", "pickup_datetime", "tpep_pickup_datetime"});
  const int lat_col = detail::find_column(header, {"lat", "latitude", "pickup_latitude"});
  const int lon_col = detail::find_column(header, {"lon", "lng", "longitude", "pickup_longitude"});
  const int count_col = detail::find_column(header, {"count", "weight", "n"});
  require(time_col >= 0 && lat_col >= 0 && lon_col >= 0,
          path + ": header must name timestamp, lat and lon columns");

  IngestStats stats;
  std::vector<EventRecord> events;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    const int needed = std::max(std::max(time_col, lat_col), std::max(lon_col, count_col));
    if (static_cast<int>(fields.size()) <= needed) {
      ++stats.unparseable;
      continue;
    }
    const auto ts = detail::parse_timestamp(fields[static_cast<std::size_t>(time_col)]);
    if (!ts) {
      ++stats.unparseable;
      continue;
    }
    EventRecord event;
    event.epoch_seconds = *ts;
    try {
      event.latitude = std::stod(fields[static_cast<std::size_t>(lat_col)]);
      event.longitude = std::stod(fields[static_cast<std::size_t>(lon_col)]);
      if (count_col >= 0) event.count = std::stod(fields[static_cast<std::size_t>(count_col)]);
    } catch (const std::exception&) {
      ++stats.unparseable;
      continue;
    }
    if (!std::isfinite(event.latitude) || !std::isfinite(event.longitude) ||
        !std::isfinite(event.count)) {
      ++stats.unparseable;
      continue;
    }
    if (event.latitude < grid.lat_min || event.latitude >= grid.lat_max ||
        event.longitude < grid.lon_min || event.longitude >= grid.lon_max) {
      ++stats.out_of_grid;
      continue;
    }
    events.push_back(event);
  }
  if (events.empty() && stats.out_of_grid == 0)
    throw std::runtime_error(path + ": no parseable event rows");
  require(!events.empty(), path + ": every event falls outside the grid");

  double t_min = events.front().epoch_seconds;
  double t_max = t_min;
  for (const auto& e : events) {
    t_min = std::min(t_min, e.epoch_seconds);
    t_max = std::max(t_max, e.epoch_seconds);
  }
  stats.epoch_start = t_min;

  const Index bins = static_cast<Index>(std::floor((t_max - t_min) / bin_seconds)) + 1;
  const Dims dims{bins, grid.lon_cells(), grid.lat_cells()};
  Vector<Scalar> values = Vector<Scalar>::Zero(dims.count());
  for (const auto& e : events) {
    const Index t = static_cast<Index>(std::floor((e.epoch_seconds - t_min) / bin_seconds));
    const Index j = static_cast<Index>(std::floor((e.longitude - grid.lon_min) / grid.cell_degrees));
    const Index k = static_cast<Index>(std::floor((e.latitude - grid.lat_min) / grid.cell_degrees));
    values[t + dims.i * (j + dims.j * k)] += static_cast<Scalar>(e.count);
    ++stats.accepted;
  }
  return {DenseTensor<Scalar>(dims, std::move(values)), stats};
}

/// "1d", "6h", "30m", "90s" or a plain number of seconds.
inline double parse_bin_width(const std::string& text) {
  require(!text.empty(), "bin width must be nonempty");
  double scale = 1;
  std::string number = text;
  switch (text.back()) {
    case 'd': scale = 86400; number.pop_back(); break;
    case 'h': scale = 3600; number.pop_back(); break;
    case 'm': scale = 60; number.pop_back(); break;
    case 's': scale = 1; number.pop_back(); break;
    default: break;
  }
  const double value = std::stod(number);
  require(value > 0, "bin width must be positive");
  return value * scale;
}

}  // namespace adasketch
