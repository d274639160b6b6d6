#include <filesystem>
#include <random>
#include <sstream>

#include "carcheck/data.hpp"
#include "carcheck/error.hpp"
#include "doctest.h"
#include "toy.hpp"

using namespace carcheck;

namespace {

SpatialDataset parse(const std::string& body) {
  std::istringstream in(std::string(kDatasetCsvHeader) + "\n" + body);
  return parse_dataset_csv(in, "test.csv");
}

std::string error_of(const std::string& body) {
  try {
    parse(body);
  } catch (const DataError& e) {
    return e.what();
  }
  return {};
}

// Small symmetric triangle plus a pendant node.
const char* kFour =
    "1,a,1,1.0,0,2;3\n"
    "2,b,2,2.0,1,1;3\n"
    "3,c,3,3.0,2,1;2;4\n"
    "4,d,4,4.0,3,3\n";

}  // namespace

TEST_CASE("table rows parse into district records") {
  const auto& d = bundled_dataset();
  const auto& r1 = d[0];
  CHECK(r1.id == 1);
  CHECK(r1.name == "Skye-Lochalsh");
  CHECK(r1.y_obs == 9);
  CHECK(r1.expected == 1.38);
  CHECK(r1.covariate == 16.0);
  CHECK(r1.neighbours == std::vector<int>{5, 9, 11, 19});
  CHECK(r1.smr() == doctest::Approx(6.52).epsilon(5e-4));

  const auto& r2 = d[1];
  CHECK(r2.name == "Banff-Buchan");
  CHECK(r2.y_obs == 39);
  CHECK(r2.expected == 8.66);
  CHECK(r2.covariate == 16.0);
  CHECK(r2.neighbours == std::vector<int>{7, 10});
}

TEST_CASE("bundled dataset has 56 districts and its first six rows match the reference values") {
  const auto& d = bundled_dataset();
  REQUIRE(d.size() == 56);
  struct Row {
    const char* name;
    int y;
    double e;
    double smr;
    double x;
    std::vector<int> nb;
  };
  const Row rows[] = {
      {"Skye-Lochalsh", 9, 1.38, 6.52, 16, {5, 9, 11, 19}}, {"Banff-Buchan", 39, 8.66, 4.50, 16, {7, 10}},
      {"Caithness", 11, 3.04, 3.62, 10, {6, 12}},           {"Berwickshire", 9, 2.53, 3.56, 24, {18, 20, 28}},
      {"Ross-Cromarty", 15, 4.26, 3.52, 10, {1, 11, 12, 13, 19}}, {"Orkney", 8, 2.40, 3.33, 24, {3, 8}},
  };
  for (std::size_t i = 0; i < 6; ++i) {
    CAPTURE(i);
    CHECK(d[i].name == rows[i].name);
    CHECK(d[i].y_obs == rows[i].y);
    CHECK(d[i].expected == rows[i].e);
    CHECK(d[i].covariate == rows[i].x);
    CHECK(d[i].neighbours == rows[i].nb);
    CHECK(std::abs(d[i].smr() - rows[i].smr) <= 0.005 + 1e-12);
  }
  std::size_t edges = 0;
  for (const auto& r : d.records()) edges += r.neighbours.size();
  CHECK(edges == 264);
}

TEST_CASE("csv parsing accepts whitespace and blank lines") {
  const auto d = parse(" 1 , a , 1 , 1.0 , 0 , 2 \n\n2,b,2,2.0,1,1\n");
  CHECK(d.size() == 2);
  CHECK(d[0].name == "a");
  CHECK(d[1].neighbours == std::vector<int>{1});
}

TEST_CASE("records are sorted by id and neighbours by id") {
  const auto d = parse("2,b,2,2.0,1,1\n1,a,1,1.0,0,3;2\n3,c,0,1.5,0,1\n");
  CHECK(d[0].id == 1);
  CHECK(d[0].neighbours == std::vector<int>{2, 3});
}

TEST_CASE("asymmetric adjacency names both directions") {
  const auto msg = error_of(
      "1,a,1,1.0,0,2\n"
      "2,b,1,1.0,0,1;3\n"
      "3,c,1,1.0,0,2;6\n"
      "4,d,1,1.0,0,5\n"
      "5,e,1,1.0,0,4;6\n"
      "6,f,1,1.0,0,5\n");
  CHECK(msg.find("asymmetric") != std::string::npos);
  CHECK(msg.find("3->6 without 6->3") != std::string::npos);
}

TEST_CASE("validation rejects each invariant violation") {
  CHECK(error_of("1,a,1,1.0,0,2\n1,b,1,1.0,0,1\n").find("duplicate") != std::string::npos);
  CHECK(error_of("1,a,1,1.0,0,3\n3,b,1,1.0,0,1\n").find("outside") != std::string::npos);
  CHECK(error_of("1,a,1,0,0,2\n2,b,1,1.0,0,1\n").find("E") != std::string::npos);
  CHECK(error_of("1,a,1,-2,0,2\n2,b,1,1.0,0,1\n").find("E") != std::string::npos);
  CHECK(error_of("1,a,-1,1.0,0,2\n2,b,1,1.0,0,1\n").find("observed") != std::string::npos);
  CHECK(error_of("1,a,1,1.0,0,1;2\n2,b,1,1.0,0,1\n").find("itself") != std::string::npos);
  CHECK(error_of("1,a,1,1.0,0,2;7\n2,b,1,1.0,0,1\n").find("out of range") != std::string::npos);
  CHECK(error_of("1,a,1,1.0,0,2;2\n2,b,1,1.0,0,1\n").find("twice") != std::string::npos);
  CHECK(error_of("1,a,1,1.0,0,\n2,b,1,1.0,0,\n").find("no neighbours") != std::string::npos);
}

TEST_CASE("parse errors report line and column") {
  const auto msg = error_of("1,a,1,1.0,0,2\n2,b,x1,1.0,0,1\n");
  CHECK(msg.find("test.csv: line 3") != std::string::npos);
  CHECK(msg.find("column 'y'") != std::string::npos);
  CHECK(error_of("1,a,1,1.0,0\n").find("expected 6 fields") != std::string::npos);

  std::istringstream bad_header("id,name,y\n");
  CHECK_THROWS_AS(parse_dataset_csv(bad_header), DataError);
  std::istringstream empty("");
  CHECK_THROWS_AS(parse_dataset_csv(empty), DataError);
}

TEST_CASE("a valid small dataset is accepted") {
  const auto d = parse(kFour);
  CHECK(d.size() == 4);
  CHECK(d.counts()[3] == 4);
  CHECK(d.expected()[2] == 3.0);
  CHECK(d.covariate()[1] == 1.0);
}

TEST_CASE("save then load is the identity") {
  const auto dir = std::filesystem::temp_directory_path() / "carcheck_test_data";
  std::filesystem::create_directories(dir);
  const auto path = dir / "roundtrip.csv";

  save_dataset(bundled_dataset(), path);
  CHECK(load_dataset(path) == bundled_dataset());

  std::mt19937_64 gen(11);
  for (int rep = 0; rep < 20; ++rep) {
    auto d = testing::random_dataset(gen, 2 + rep % 7);
    save_dataset(d, path);
    const auto back = load_dataset(path);
    CHECK(back == d);
    CHECK(dataset_checksum(back) == dataset_checksum(d));
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("checksum identifies content") {
  const auto a = parse(kFour);
  const auto b = parse(
      "1,a,1,1.0,0,2;3\n"
      "2,b,2,2.0,1,1;3\n"
      "3,c,3,3.0,2,1;2;4\n"
      "4,d,5,4.0,3,3\n");
  CHECK(dataset_checksum(a) != dataset_checksum(b));
  std::istringstream bundled{std::string(bundled_dataset_csv())};
  CHECK(dataset_checksum(bundled_dataset()) == dataset_checksum(parse_dataset_csv(bundled)));
}

TEST_CASE("missing file is a data error") {
  CHECK_THROWS_AS(load_dataset("/nonexistent/carcheck.csv"), DataError);
}
