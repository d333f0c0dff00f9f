#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "adasketch/ingest.hpp"

using namespace adasketch;

namespace {

struct TempCsv {
  std::filesystem::path path;
  explicit TempCsv(const std::string& content) {
    path = std::filesystem::temp_directory_path() /
           ("adasketch_ingest_" + std::to_string(std::random_device{}()) + ".csv");
    std::ofstream out(path);
    out << content;
  }
  ~TempCsv() { std::filesystem::remove(path); }
};

GridSpec small_grid() {
  GridSpec grid;
  grid.lat_min = 0.0;
  grid.lat_max = 0.4;
  grid.lon_min = 0.0;
  grid.lon_max = 0.3;
  grid.cell_degrees = 0.1;
  return grid;
}

}  // namespace

TEST_CASE("events in one cell and bin accumulate") {
  TempCsv csv(
      "timestamp,lat,lon\n"
      "100,0.05,0.05\n"
      "110,0.05,0.05\n"
      "120,0.05,0.05\n");
  const auto [tensor, stats] = ingest_csv<double>(csv.path.string(), small_grid(), 3600);
  CHECK(stats.accepted == 3);
  CHECK(tensor.dims().i == 1);
  CHECK(tensor(0, 0, 0) == 3.0);
}

TEST_CASE("cell boundaries are half open") {
  TempCsv csv(
      "timestamp,lat,lon\n"
      "0,0.1,0.0\n"     // lat exactly on the 0.1 boundary: cell starting at 0.1
      "0,0.0,0.1\n"     // lon exactly on the 0.1 boundary
      "0,0.4,0.0\n"     // on the upper grid edge: dropped
      "0,0.0,0.3\n");   // on the upper lon edge: dropped
  const auto [tensor, stats] = ingest_csv<double>(csv.path.string(), small_grid(), 60);
  CHECK(stats.accepted == 2);
  CHECK(stats.out_of_grid == 2);
  CHECK(tensor(0, 0, 1) == 1.0);  // k indexes latitude
  CHECK(tensor(0, 1, 0) == 1.0);  // j indexes longitude
}

TEST_CASE("paper-extent grid maps to a (120,200) spatial shape") {
  GridSpec nyc;  // defaults are the published extent
  CHECK(nyc.lon_cells() == 120);
  CHECK(nyc.lat_cells() == 200);
  TempCsv csv(
      "timestamp,lat,lon\n"
      "2015-01-01T00:00:00,40.70,-74.00\n"
      "2015-01-02T12:00:00,40.70,-74.00\n");
  const auto [tensor, stats] = ingest_csv<double>(csv.path.string(), nyc, 86400);
  CHECK(tensor.dims().j == 120);
  CHECK(tensor.dims().k == 200);
  CHECK(tensor.dims().i == 2);  // daily bins, a day and a half apart
  CHECK(stats.accepted == 2);
}

TEST_CASE("timestamp formats and the count column") {
  TempCsv csv(
      "timestamp,lat,lon,count\n"
      "2020-06-01T00:00:00,0.05,0.05,2\n"
      "2020-06-01 00:30:00,0.05,0.05,3\n"
      "2020-06-02,0.15,0.05,1\n");
  const auto [tensor, stats] = ingest_csv<double>(csv.path.string(), small_grid(), 86400);
  CHECK(stats.accepted == 3);
  CHECK(tensor.dims().i == 2);
  CHECK(tensor(0, 0, 0) == 5.0);
  CHECK(tensor(1, 0, 1) == 1.0);
}

TEST_CASE("unparseable rows are skipped and counted") {
  TempCsv csv(
      "timestamp,lat,lon\n"
      "not-a-time,0.05,0.05\n"
      "100,bogus,0.05\n"
      "100,0.05,0.05\n"
      "50\n");
  const auto [tensor, stats] = ingest_csv<double>(csv.path.string(), small_grid(), 60);
  CHECK(stats.accepted == 1);
  CHECK(stats.unparseable == 3);
}

TEST_CASE("a file with no parseable rows is an input error") {
  TempCsv csv("timestamp,lat,lon\nnope,x,y\n");
  CHECK_THROWS_AS(ingest_csv<double>(csv.path.string(), small_grid(), 60), std::runtime_error);
}

TEST_CASE("ingestion conserves the accepted event count") {
  std::mt19937_64 rng(233);
  std::uniform_real_distribution<double> lat(-0.05, 0.45), lon(-0.05, 0.35), time(0, 5000);
  std::string content = "timestamp,lat,lon\n";
  for (int n = 0; n < 500; ++n)
    content += std::to_string(time(rng)) + "," + std::to_string(lat(rng)) + "," +
               std::to_string(lon(rng)) + "\n";
  TempCsv csv(content);
  const auto [tensor, stats] = ingest_csv<double>(csv.path.string(), small_grid(), 600);
  CHECK(stats.accepted + stats.out_of_grid == 500);
  CHECK(tensor.values().sum() == doctest::Approx(static_cast<double>(stats.accepted)));
}

TEST_CASE("bin width parsing") {
  CHECK(parse_bin_width("1d") == 86400.0);
  CHECK(parse_bin_width("6h") == 6 * 3600.0);
  CHECK(parse_bin_width("30m") == 1800.0);
  CHECK(parse_bin_width("90s") == 90.0);
  CHECK(parse_bin_width("3600") == 3600.0);
  CHECK_THROWS(parse_bin_width("0h"));
}
