#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "hmmstab/csv.hpp"

using namespace hmmstab;

TEST_CASE("csv quoting and round trip") {
  const auto path = std::filesystem::temp_directory_path() / "hmmstab_csv_test.csv";
  {
    CsvWriter w(path, {"a", "b,c", "d"});
    w.field("plain").field("has \"quote\", comma").field(0.1);
    w.end_row();
    w.field(3).empty().field(-0.5);
    w.end_row();
  }
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str() == "a,\"b,c\",d\nplain,\"has \"\"quote\"\", comma\",0.10000000000000001\n3,,-0.5\n");
  const auto rows = read_csv(path);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0][1] == "b,c");
  CHECK(rows[1][1] == "has \"quote\", comma");
  CHECK(std::stod(rows[1][2]) == 0.1);
  CHECK(rows[2][1].empty());
  std::filesystem::remove(path);
}

TEST_CASE("format_double round trips") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 12345678.9}) CHECK(std::stod(format_double(v)) == v);
  CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
}
