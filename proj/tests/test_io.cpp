#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "ggrow/matrix_io.hpp"
#include "helpers.hpp"

using namespace ggrow;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

bool bitwise_equal(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (a(i, j) != b(i, j)) return false;
      if (std::signbit(a(i, j)) != std::signbit(b(i, j))) return false;
    }
  return true;
}

}  // namespace

TEST_CASE("g17 formatting round-trips doubles exactly") {
  REQUIRE(format_g17(1.0) == "1");
  REQUIRE(format_g17(0.5) == "0.5");
  REQUIRE(format_g17(0.0) == "0");

  std::vector<double> specials = {1.0 / 3.0,
                                  std::sqrt(2.0),
                                  1e-300,
                                  1e300,
                                  -0.0,
                                  std::numeric_limits<double>::max(),
                                  std::numeric_limits<double>::min(),
                                  std::numeric_limits<double>::denorm_min(),
                                  -std::numeric_limits<double>::max()};
  RandomStream rs(12);
  for (int i = 0; i < 200; ++i) specials.push_back(rs.normal() * 1e6);
  for (const double v : specials) {
    const double back = parse_double(format_g17(v), "roundtrip");
    REQUIRE(back == v);
    REQUIRE(std::signbit(back) == std::signbit(v));
  }
}

TEST_CASE("parse_double accepts padded numbers and rejects junk") {
  REQUIRE(parse_double("1.5 ", "t") == 1.5);
  REQUIRE(parse_double(" 2", "t") == 2.0);
  REQUIRE(parse_double("-3e-2", "t") == -0.03);
  REQUIRE_THROWS_AS(parse_double("abc", "t"), IoError);
  REQUIRE_THROWS_AS(parse_double("1.5x", "t"), IoError);
  REQUIRE_THROWS_AS(parse_double("", "t"), IoError);
  REQUIRE_THROWS_AS(parse_double("1,2", "t"), IoError);
}

TEST_CASE("data CSV round-trips bitwise") {
  const auto dir = test::scratch_dir("io_data");
  RandomStream rs(3);
  const Eigen::MatrixXd m = test::random_data(rs, 7, 3) * 1e3;
  write_data_csv(dir / "m.csv", m);
  REQUIRE(bitwise_equal(read_data_csv(dir / "m.csv"), m));

  // single cell
  Eigen::MatrixXd one(1, 1);
  one(0, 0) = -1.0 / 7.0;
  write_data_csv(dir / "one.csv", one);
  REQUIRE(bitwise_equal(read_data_csv(dir / "one.csv"), one));
}

TEST_CASE("data CSV reader tolerates blank lines and CRLF") {
  const auto dir = test::scratch_dir("io_forgiving");
  spit(dir / "crlf.csv", "1,2\r\n\r\n3,4\r\n\n");
  const Eigen::MatrixXd m = read_data_csv(dir / "crlf.csv");
  REQUIRE(m.rows() == 2);
  REQUIRE(m.cols() == 2);
  REQUIRE(m(0, 0) == 1.0);
  REQUIRE(m(1, 1) == 4.0);
}

TEST_CASE("data CSV reader rejects malformed input") {
  const auto dir = test::scratch_dir("io_bad");
  spit(dir / "ragged.csv", "1,2\n3\n");
  REQUIRE_THROWS_AS(read_data_csv(dir / "ragged.csv"), IoError);
  spit(dir / "empty.csv", "");
  REQUIRE_THROWS_AS(read_data_csv(dir / "empty.csv"), IoError);
  spit(dir / "junk.csv", "1,fish\n");
  REQUIRE_THROWS_AS(read_data_csv(dir / "junk.csv"), IoError);
  REQUIRE_THROWS_AS(read_data_csv(dir / "missing.csv"), IoError);
}

TEST_CASE("symmetric matrix CSV round-trips bitwise") {
  const auto dir = test::scratch_dir("io_matrix_csv");
  RandomStream rs(9);
  const SymMatrix s = test::random_spd(rs, 6);
  write_matrix_csv(dir / "s.csv", s);
  const SymMatrix back = read_matrix_csv(dir / "s.csv");
  REQUIRE(bitwise_equal(back.mat(), s.mat()));

  spit(dir / "rect.csv", "1,2,3\n4,5,6\n");
  REQUIRE_THROWS_AS(read_matrix_csv(dir / "rect.csv"), IoError);

  // asymmetric square input is symmetrised on load
  spit(dir / "asym.csv", "0,1\n3,0\n");
  const SymMatrix sym = read_matrix_csv(dir / "asym.csv");
  REQUIRE(sym(0, 1) == 2.0);
  REQUIRE(sym(1, 0) == 2.0);
}

TEST_CASE("matrix JSON round-trips bitwise under a strict envelope") {
  const auto dir = test::scratch_dir("io_matrix_json");
  RandomStream rs(14);
  const SymMatrix s = test::random_spd(rs, 5);
  write_matrix_json(dir / "s.json", s);
  const SymMatrix back = read_matrix_json(dir / "s.json");
  REQUIRE(bitwise_equal(back.mat(), s.mat()));

  const nlohmann::json j = nlohmann::json::parse(slurp(dir / "s.json"));
  REQUIRE(j.size() == 2);
  REQUIRE(j.at("dim") == 5);
  REQUIRE(j.at("entries").size() == 5);
}

TEST_CASE("matrix JSON reader rejects malformed envelopes") {
  const auto dir = test::scratch_dir("io_json_bad");
  spit(dir / "extra.json",
       R"({"dim": 2, "entries": [[1,0],[0,1]], "note": "x"})");
  REQUIRE_THROWS_AS(read_matrix_json(dir / "extra.json"), IoError);
  spit(dir / "noentries.json", R"({"dim": 2})");
  REQUIRE_THROWS_AS(read_matrix_json(dir / "noentries.json"), IoError);
  spit(dir / "mismatch.json", R"({"dim": 2, "entries": [[1,0],[0,1],[0,0]]})");
  REQUIRE_THROWS_AS(read_matrix_json(dir / "mismatch.json"), IoError);
  spit(dir / "shortrow.json", R"({"dim": 2, "entries": [[1,0],[0]]})");
  REQUIRE_THROWS_AS(read_matrix_json(dir / "shortrow.json"), IoError);
  spit(dir / "zerodim.json", R"({"dim": 0, "entries": []})");
  REQUIRE_THROWS_AS(read_matrix_json(dir / "zerodim.json"), IoError);
  spit(dir / "array.json", R"([[1,0],[0,1]])");
  REQUIRE_THROWS_AS(read_matrix_json(dir / "array.json"), IoError);
  spit(dir / "truncated.json", R"({"dim": 2, "entries": [[1,)");
  REQUIRE_THROWS_AS(read_matrix_json(dir / "truncated.json"), IoError);
}

TEST_CASE("read_matrix_any dispatches on the extension") {
  const auto dir = test::scratch_dir("io_any");
  RandomStream rs(20);
  const SymMatrix s = test::random_spd(rs, 4);
  write_matrix_csv(dir / "s.csv", s);
  write_matrix_json(dir / "s.json", s);
  REQUIRE(bitwise_equal(read_matrix_any(dir / "s.csv").mat(), s.mat()));
  REQUIRE(bitwise_equal(read_matrix_any(dir / "s.json").mat(), s.mat()));
  spit(dir / "s.txt", "1\n");
  REQUIRE_THROWS_AS(read_matrix_any(dir / "s.txt"), IoError);
}
