#include "cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using treebounds::cli::run;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name, const std::string& text) {
  const auto dir = fs::temp_directory_path() / "treebounds_cli_test";
  fs::create_directories(dir);
  const auto path = dir / name;
  std::ofstream(path) << text;
  return path;
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> v;
  std::istringstream in(s);
  for (std::string line; std::getline(in, line);) v.push_back(line);
  return v;
}

std::vector<double> column(const std::string& csv, std::size_t c) {
  std::vector<double> v;
  const auto rows = lines(csv);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    std::istringstream in(rows[r]);
    std::string cell;
    for (std::size_t i = 0; i <= c; ++i) std::getline(in, cell, ',');
    v.push_back(std::stod(cell));
  }
  return v;
}

}  // namespace

TEST(Cli, Validate) {
  EXPECT_EQ(invoke({"validate", "data/chow_liu_tree1.json"}).code, 0);
  const auto bad = invoke({"validate", "data/frechet_violation.json"});
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.out.find("(1,2)"), std::string::npos);
  EXPECT_EQ(invoke({"validate", "data/does_not_exist.json"}).code, 1);
  EXPECT_EQ(invoke({"validate", scratch("garbage.json", "{not json").string()}).code, 1);
  const auto cyclic = scratch("cyclic.json", R"({"root":1,"nodes":[{"id":1,"p":0.5},{"id":2,"p":0.5}],
    "edges":[{"parent":1,"child":2,"p11":0.2},{"parent":2,"child":1,"p11":0.2}]})");
  EXPECT_EQ(invoke({"validate", cyclic.string()}).code, 2);
}

TEST(Cli, BoundTreeTwo) {
  const auto r = invoke({"bound", "data/chow_liu_tree2.json"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines(r.out).front(), "k,U,L,P_ci,U_uv,L_uv");
  const std::vector<double> u{1, 0.8, 0.65, 0.25}, l{0.8, 0.475, 0.3, 0.0},
      ci{0.8963, 0.6703, 0.4346, 0.1488};
  const auto cu = column(r.out, 1), cl = column(r.out, 2), cc = column(r.out, 3);
  ASSERT_EQ(cu.size(), 4u);
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(cu[i], u[i], 1e-6);
    EXPECT_NEAR(cl[i], l[i], 1e-6);
    EXPECT_NEAR(cc[i], ci[i], 5e-5);
  }
  const auto table = invoke({"bound", "data/chow_liu_tree2.json", "--format", "table", "-k", "2"});
  EXPECT_NE(table.out.find("0.8000  0.4750  0.6703"), std::string::npos) << table.out;
}

TEST(Cli, BoundEdgeRows) {
  const auto zero = invoke({"bound", "data/chow_liu_tree1.json", "-k", "0"});
  EXPECT_EQ(lines(zero.out).at(1), "0,1,1,1,1,1");
  const auto single =
      scratch("single.json", R"({"root":7,"nodes":[{"id":7,"p":0.3}],"edges":[]})");
  const auto r = invoke({"bound", single.string()});
  ASSERT_EQ(r.code, 0);
  for (std::size_t c = 1; c <= 5; ++c) EXPECT_NEAR(column(r.out, c).at(0), 0.3, 1e-15);
  const auto upper = invoke({"bound", "data/chow_liu_tree1.json", "--sides", "upper", "-k", "1,4"});
  EXPECT_EQ(lines(upper.out).at(2), "4,0.3,,0.17851239669421484,0.5,0");
  EXPECT_EQ(invoke({"bound", "data/frechet_violation.json"}).code, 2);
  EXPECT_EQ(invoke({"bound", "data/chow_liu_tree1.json", "-k", "x"}).code, 1);
}

TEST(Cli, CiAndUnivariate) {
  const auto ci = invoke({"ci", "data/chow_liu_tree1.json", "-k", "0..4"});
  ASSERT_EQ(ci.code, 0);
  const auto pmf = column(ci.out, 1);
  double total = 0;
  for (double v : pmf) total += v;
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_NEAR(column(ci.out, 2).at(1), 0.8704, 5e-5);
  const auto uv = invoke({"univariate", "data/chow_liu_tree1.json"});
  EXPECT_NEAR(column(uv.out, 1).at(2), 0.7167, 5e-5);
  EXPECT_NEAR(column(uv.out, 2).at(1), 0.3833, 5e-5);
}

TEST(Cli, Oracle) {
  const auto v = invoke({"oracle", "data/vorobev_triangle.json", "-k", "1"});
  EXPECT_EQ(v.code, 2);
  EXPECT_EQ(v.out, "INFEASIBLE\n");
  const auto t = invoke({"oracle", "data/chow_liu_tree1.json", "-k", "2"});
  EXPECT_EQ(t.code, 0);
  EXPECT_NEAR(std::stod(t.out), 0.8, 1e-9);
  const auto w = invoke({"oracle", "data/chow_liu_tree1.json", "--weights", "0,0,1,1,1"});
  EXPECT_NEAR(std::stod(w.out), 0.8, 1e-9);
  EXPECT_EQ(invoke({"oracle", "data/chow_liu_tree1.json", "--weights", "0,1"}).code, 1);

  std::string big = R"({"nodes":[)";
  for (int i = 1; i <= 21; ++i) big += (i > 1 ? "," : "") + std::string(R"({"id":)") + std::to_string(i) + R"(,"p":0.5})";
  big += "]}";
  EXPECT_EQ(invoke({"oracle", scratch("big.json", big).string(), "-k", "3"}).code, 3);
}

TEST(Cli, ExperimentBandsDeterministic) {
  const std::vector<std::string> base{"experiment-bands", "--n", "6", "--runs", "5", "--seed", "11"};
  auto serial = base;
  serial.insert(serial.end(), {"--jobs", "1"});
  auto wide = base;
  wide.insert(wide.end(), {"--jobs", "4"});
  const auto a = invoke(serial), b = invoke(wide), c = invoke(serial);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out, c.out);
  EXPECT_EQ(lines(a.out).size(), 31u);
  EXPECT_EQ(lines(a.out).front(), "run,k,U,U_uv,P_ci");
  const auto u = column(a.out, 2), uu = column(a.out, 3), ci = column(a.out, 4);
  for (std::size_t i = 0; i < u.size(); ++i) {
    EXPECT_LE(u[i], uu[i] + 1e-7);
    EXPECT_LE(ci[i], u[i] + 1e-7);
  }
  auto other = serial;
  other[6] = "12";
  EXPECT_NE(invoke(other).out, a.out);

  // A single run reproduces the corresponding run of a longer experiment.
  std::vector<std::string> one{"experiment-bands", "--n", "6", "--runs", "1", "--seed", "11"};
  EXPECT_EQ(lines(invoke(one).out).at(3), lines(a.out).at(3));

  const auto file = fs::temp_directory_path() / "treebounds_cli_test" / "bands.csv";
  auto to_file = serial;
  to_file.insert(to_file.end(), {"--output", file.string()});
  ASSERT_EQ(invoke(to_file).code, 0);
  std::ifstream in(file);
  std::stringstream buf;
  buf << in.rdbuf();
  EXPECT_EQ(buf.str(), a.out);
  EXPECT_EQ(invoke({"experiment-bands", "--n", "1"}).code, 1);
  EXPECT_EQ(invoke({"experiment-bands", "--copula", "gumbel"}).code, 1);
}

TEST(Cli, OrderStats) {
  const auto r = invoke({"orderstats", "data/series5.json", "--copula", "independence", "--mu",
                         "0.5426,-0.9585,0.2673,0.4976,-0.0030", "-k", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = lines(r.out);
  EXPECT_EQ(rows.size(), 62u);
  EXPECT_EQ(rows.front(), "x,U,L,CI,U_uv,L_uv");
  EXPECT_EQ(rows.at(31).substr(0, 2), "0,");
  EXPECT_EQ(rows.at(2).substr(0, 5), "-2.9,");

  const auto hi = invoke({"orderstats", "data/series5.json", "--copula", "comonotone", "-k", "5",
                          "--x-min", "38", "--x-max", "40", "--x-step", "1"});
  ASSERT_EQ(hi.code, 0);
  for (const auto& line : lines(hi.out)) {
    if (line.front() != 'x') EXPECT_EQ(line.substr(line.find(',')), ",1,1,1,1,1");
  }

  const auto grid = scratch("grid.json", R"({"x":[0,1],"marginals":{"1":[0.1,0.5],"2":[0.2,0.5]},
    "bivariates":{"1-2":[0.05,0.7]}})");
  const auto two = scratch("two.json", R"({"root":1,"nodes":[{"id":1},{"id":2}],
    "edges":[{"parent":1,"child":2}]})");
  const auto bad = invoke({"orderstats", two.string(), "--grid", grid.string(), "-k", "1"});
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("x=1"), std::string::npos) << bad.err;
  EXPECT_EQ(invoke({"orderstats", "data/series5.json", "-k", "1"}).code, 1);
  EXPECT_EQ(invoke({"orderstats", "data/series5.json", "--copula", "independence", "--mu", "1,2",
                    "-k", "1"})
                .code,
            1);
}

TEST(Cli, Usage) {
  EXPECT_EQ(invoke({}).code, 1);
  EXPECT_EQ(invoke({"frobnicate"}).code, 1);
  EXPECT_EQ(invoke({"--format", "xml", "bound", "data/chow_liu_tree1.json"}).code, 1);
  EXPECT_EQ(invoke({"--help"}).code, 0);
}
