#include "rim/report.hpp"
#include "rim/rng.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>

using namespace rim;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::filesystem::path temp_file(const char* name) { return std::filesystem::temp_directory_path() / name; }

}  // namespace

TEST(CsvEscape, QuotesOnlyWhenNeeded) {
  EXPECT_EQ(csv_escape("plain"), "plain");
  EXPECT_EQ(csv_escape(""), "");
  EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv_escape("line\nbreak"), "\"line\nbreak\"");
  EXPECT_EQ(csv_escape("cr\r"), "\"cr\r\"");
}

TEST(FormatDouble, RoundTripsBitExactly) {
  Rng rng(1);
  for (int k = 0; k < 10000; ++k) {
    const double v = (rng.uniform() - 0.5) * std::pow(10.0, rng.uniform(-300, 300));
    EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v);
  }
  for (double v : {0.0, -0.0, 1.0, 0.1, std::numeric_limits<double>::denorm_min(), std::numeric_limits<double>::max()})
    EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v);
  EXPECT_EQ(format_double(0.5), "0.5");
}

TEST(CsvWriter, HeaderRowsAndCrlf) {
  const auto path = temp_file("rim_report_test.csv");
  {
    CsvWriter w(path.string(), {"name", "n", "x", "ok"});
    w.row(std::string("a,b"), 3, 0.25, true);
    w.row("c", std::size_t{4}, -1.0, false);
  }
  EXPECT_EQ(slurp(path), "name,n,x,ok\r\n\"a,b\",3,0.25,1\r\nc,4,-1,0\r\n");
  std::filesystem::remove(path);
}

TEST(CsvWriter, RejectsWrongFieldCountAndBadPath) {
  const auto path = temp_file("rim_report_test2.csv");
  CsvWriter w(path.string(), {"a", "b"});
  EXPECT_THROW(w.row(1), std::invalid_argument);
  EXPECT_THROW(w.row(1, 2, 3), std::invalid_argument);
  EXPECT_THROW(CsvWriter("/nonexistent/dir/x.csv", {"a"}), std::runtime_error);
  EXPECT_THROW(CsvWriter(path.string(), {}), std::invalid_argument);
  std::filesystem::remove(path);
}
