#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "sobonet/errors.hpp"
#include "sobonet/report.hpp"

using namespace sobonet;

TEST_CASE("numbers round trip through their shortest form") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(std::stod(format_number(0.1)) == 0.1);
  for (double v : {1.0 / 3.0, 31.730635116002944, 1e-300, -2.5e17, 6.02214076e23})
    CHECK(std::stod(format_number(v)) == v);
  CHECK(format_number(2.0) == "2");
}

TEST_CASE("csv layout") {
  const CsvTable empty{{"K", "N", "L", "order", "sup_err"}, {}};
  CHECK(empty.str() == "K,N,L,order,sup_err\n");

  CsvTable t{{"arch", "U"}, {}};
  t.add({"1,1,1", "6"});
  t.add({"say \"hi\"", "7"});
  CHECK(t.str() == "arch,U\n\"1,1,1\",6\n\"say \"\"hi\"\"\",7\n");
  CHECK_THROWS_AS(t.add({"x"}), InvalidInput);
}

TEST_CASE("files are written byte for byte") {
  const char* path = "test_report_out.csv";
  CsvTable t{{"a"}, {}};
  t.add({format_number(0.1)});
  write_csv(t, path);
  std::ifstream is(path, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  CHECK(ss.str() == "a\n0.1\n");
  std::remove(path);
  CHECK_THROWS(write_csv(t, "/nonexistent-dir/x.csv"));
}
