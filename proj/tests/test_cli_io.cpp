#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "tlpvol/asymptotics.hpp"
#include "tlpvol/cli.hpp"
#include "tlpvol/errors.hpp"
#include "tlpvol/io.hpp"

using namespace tlpvol;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("tlpvol_test_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "tlpvol");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& file) {
  std::ifstream in(file);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Data rows of a CSV (comment lines dropped), split on commas.
std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_SUITE("cli_io") {

TEST_CASE("three-row observation file") {
  std::istringstream in("t,x\n0,1\n0.5,1\n1.0,1\n");
  const auto p = read_observations(in);
  CHECK(p.n == 2);
  CHECK(p.T == 1.0);
  CHECK(p.delta == 0.5);
  CHECK(p.values == std::vector<double>{1.0, 1.0, 1.0});
  CHECK_FALSE(p.jump_mask.has_value());
}

TEST_CASE("observation file errors") {
  std::istringstream irregular("t,x\n0,1\n0.5,1\n1.2,1\n");
  try {
    read_observations(irregular);
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
  }
  std::istringstream backwards("t,x\n0,1\n0.5,1\n0.4,1\n");
  CHECK_THROWS_WITH_AS(read_observations(backwards), doctest::Contains("row 3"), DataError);
  std::istringstream garbage("# c\nt,x\n0,1\n0.5,zz\n1,1\n");
  CHECK_THROWS_WITH_AS(read_observations(garbage), doctest::Contains("line 4"), DataError);
  std::istringstream short_file("t,x\n0,1\n1,1\n");
  CHECK_THROWS_AS(read_observations(short_file), DataError);
  std::istringstream header("time,x\n0,1\n1,1\n2,1\n");
  CHECK_THROWS_AS(read_observations(header), DataError);
  CHECK_THROWS_AS(read_observations(std::string("/nonexistent/file.csv")), DataError);
}

TEST_CASE("million-row round trip is bit identical") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> z;
  Path p;
  p.n = 1000000;
  p.T = 1.0;
  p.delta = 1e-6;
  p.values.resize(p.n + 1);
  double x = 0.0;
  for (auto& v : p.values) {
    v = x;
    x += 1e-3 * z(rng);
  }
  std::stringstream buf;
  write_observations(buf, p, {"seed = 8"});
  const auto back = read_observations(buf);
  CHECK(back.n == p.n);
  CHECK(back.values == p.values);
  CHECK(std::abs(back.delta - p.delta) < 1e-18);
}

TEST_CASE("format_double round-trips") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0})
    CHECK(std::stod(format_double(v)) == v);
}

TEST_CASE("minimal estimate config parses") {
  std::istringstream in("# estimate\nmode = estimate\ninput = obs.csv\nx = 0, 0.5\nh = 0.1\neta = 0.6\n");
  const auto c = parse_config(in);
  CHECK(c.mode == Mode::estimate);
  CHECK(c.input == "obs.csv");
  CHECK(c.x_points == std::vector<double>{0.0, 0.5});
  CHECK(*c.h == 0.1);
  CHECK(c.eta == 0.6);
  CHECK_FALSE(c.h_auto);

  std::istringstream auto_h("mode = estimate\ninput = obs.csv\nx = 0\nh = auto\neta = 0.6\n");
  const auto a = parse_config(auto_h);
  CHECK(a.h_auto);
  CHECK_FALSE(a.h.has_value());
  bool echoed = false;
  for (const auto& [k, v] : a.resolved) echoed |= (k == "h" && v == "auto");
  CHECK(echoed);
}

TEST_CASE("config errors name the key") {
  const auto fails_naming = [](const std::string& text, const std::string& key) {
    std::istringstream in(text);
    try {
      parse_config(in);
      return false;
    } catch (const ValidationError& e) {
      return std::string(e.what()).find("'" + key + "'") != std::string::npos;
    }
  };
  const std::string base = "mode = estimate\ninput = a.csv\nx = 0\nh = 0.1\n";
  CHECK(fails_naming(base + "eta = 1.5\n", "eta"));
  CHECK(fails_naming(base + "eta = 0.5\nbogus = 3\n", "bogus"));
  CHECK(fails_naming("mode = estimate\nx = 0\nh = 0.1\neta = 0.5\n", "input"));
  CHECK(fails_naming("mode = estimate\ninput = a.csv\nx = 0\neta = 0.5\n", "h"));
  CHECK(fails_naming(base + "eta = 0.5\nlevel = 2\n", "level"));
  CHECK(fails_naming(base + "eta = abc\n", "eta"));
  CHECK(fails_naming(base + "eta = 0.5\nn = -4\n", "n"));
  CHECK(fails_naming("mode = fly\n", "mode"));
  CHECK(fails_naming("eta = 0.5\n", "mode"));
  CHECK(fails_naming("mode = check\neta = 0.5\n", "phi"));
  CHECK(fails_naming("mode = simulate\nia = stable\nalpha = 1.2\n", "alpha"));
}

TEST_CASE("grid specification and estimator list") {
  std::map<std::string, std::string> kv = {{"input", "a.csv"}, {"eta", "0.5"}, {"h", "0.2"},
                                           {"x_min", "-1"}, {"x_max", "1"}, {"x_count", "5"},
                                           {"estimator", "local_linear, nw_plain, local_poly(2)"}};
  const auto c = build_run_config(Mode::estimate, kv);
  CHECK(c.x_points == std::vector<double>{-1.0, -0.5, 0.0, 0.5, 1.0});
  REQUIRE(c.estimators.size() == 3);
  CHECK(c.estimators[2] == Estimator{EstimatorKind::local_poly, 2});
  kv.erase("estimator");
  kv["p"] = "2";
  CHECK(build_run_config(Mode::estimate, kv).estimators[0] == Estimator{EstimatorKind::local_poly, 2});
}

TEST_CASE("rate-condition warnings are surfaced") {
  std::istringstream in("mode = mc\nx = 0\neta = 0.5\nphi = 0.7\nreport_json = r.json\n");
  const auto c = parse_config(in);
  REQUIRE_FALSE(c.warnings.empty());
  CHECK(c.warnings[0].find("2*phi < 1") != std::string::npos);
}

TEST_CASE("check-conditions subcommand") {
  const auto r = cli({"check-conditions", "--alpha", "0.5", "--eta", "0.9", "--phi", "0.4", "--ia"});
  CHECK(r.code == 0);
  CHECK(r.out.find(check_rate_conditions({0.9, 0.4, 0.5}, true).to_string()) != std::string::npos);
  const auto bad = cli({"check-conditions", "--alpha", "0.5", "--eta", "0.9", "--phi", "0.5", "--ia"});
  CHECK(bad.code == 1);
  CHECK(bad.out.find("FAIL  eta/2 > phi") != std::string::npos);
  const auto fa = cli({"check-conditions", "--eta", "0.5", "--phi", "0.3"});
  CHECK(fa.code == 0);
}

TEST_CASE("simulate then estimate") {
  TempDir dir;
  const auto sim = cli({"simulate", "--n", "4000", "--T", "1", "--seed", "5", "--lambda", "3",
                        "--output", dir / "obs.csv", "--jump_times", dir / "jumps.csv"});
  REQUIRE(sim.code == 0);
  const std::string obs = slurp(dir / "obs.csv");
  CHECK(obs.find("# seed = 5") != std::string::npos);
  CHECK(obs.find("# model.lambda = 3.0") != std::string::npos);
  const auto path = read_observations(dir / "obs.csv");
  CHECK(path.n == 4000);
  CHECK(csv_rows(slurp(dir / "jumps.csv"))[0][0] == "jump_time");

  const auto est = cli({"estimate", "--input", dir / "obs.csv", "--x", "0,0.1", "--h", "0.2",
                        "--eta", "0.6", "--output", dir / "est.csv"});
  REQUIRE(est.code == 0);
  const auto text = slurp(dir / "est.csv");
  CHECK(text.find("# input = ") != std::string::npos);
  const auto rows = csv_rows(text);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == std::vector<std::string>{"x", "estimator", "sigma2_hat", "L_hat", "se", "ci_low",
                                            "ci_high", "flagged_fraction", "h"});
  const double s2 = std::stod(rows[1][2]);
  CHECK(s2 > 0.5);
  CHECK(s2 < 1.5);
  CHECK(std::stod(rows[1][5]) <= std::stod(rows[1][6]));
  CHECK(std::stod(rows[1][8]) == 0.2);

  // identical to the library call
  const auto kernel = KernelSpec::one_sided_epanechnikov();
  const double thr = ThresholdSpec(0.6).value(path.delta);
  const auto direct = local_linear_sigma2(path, 0.0, 0.2, kernel, thr);
  CHECK(std::stod(rows[1][2]) == direct.sigma2_hat);
}

TEST_CASE("h = auto matches a direct optimal_bandwidth call") {
  TempDir dir;
  REQUIRE(cli({"simulate", "--n", "20000", "--T", "4", "--seed", "9", "--diffusion", "sine_bump",
               "--drift", "linear_mean_revert", "--output", dir / "obs.csv"})
              .code == 0);
  {
    std::ofstream cfg(dir / "est.cfg");
    cfg << "mode = estimate\ninput = " << (dir / "obs.csv") << "\nx = 0.3\nh = auto\n"
        << "h_pilot = 0.25\neta = 0.5\n";
  }
  const auto r = cli({"estimate", "--config", dir / "est.cfg", "--output", dir / "est.csv"});
  REQUIRE(r.code == 0);
  const auto text = slurp(dir / "est.csv");
  CHECK(text.find("# h = auto") != std::string::npos);
  const auto rows = csv_rows(text);
  const double h_cli = std::stod(rows[1][8]);

  const auto path = read_observations(dir / "obs.csv");
  const auto kernel = KernelSpec::one_sided_epanechnikov();
  const double thr = ThresholdSpec(0.5).value(path.delta);
  const double lt = local_time_hat(path, 0.3, 0.25, kernel);
  const double curv = plugin_curvature(path, 0.3, 0.25, kernel, thr);
  const double h_direct = optimal_bandwidth(path.delta, lt, curv, kernel);
  CHECK(h_cli == h_direct);
  CHECK(std::stod(rows[1][2]) == local_linear_sigma2(path, 0.3, h_direct, kernel, thr).sigma2_hat);
}

TEST_CASE("bandwidth subcommand") {
  const auto r = cli({"bandwidth", "--delta", "0.001", "--local_time", "1", "--curvature", "2"});
  REQUIRE(r.code == 0);
  const auto rows = csv_rows(r.out);
  CHECK(rows[0][0] == "h");
  CHECK(std::stod(rows[1][0]) == optimal_bandwidth(0.001, 1.0, 2.0, KernelSpec::one_sided_epanechnikov()));
  CHECK(cli({"bandwidth", "--delta", "0.001", "--local_time", "1", "--curvature", "0"}).code == 3);
  CHECK(cli({"bandwidth", "--delta", "0.001"}).code == 1);
}

TEST_CASE("mc writes JSON and CSV") {
  TempDir dir;
  const auto r = cli({"mc", "--n", "2000", "--replications", "10", "--x", "0", "--eta", "0.5", "--h",
                      "0.2", "--drift", "linear_mean_revert", "--report_json", dir / "r.json",
                      "--report_csv", dir / "r.csv"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(slurp(dir / "r.json"));
  CHECK(j["experiment"]["replications"] == 10);
  CHECK(j["cells"][0]["z_samples"].size() == 10);
  CHECK(j["resolved_config"]["mode"] == "mc");
  const auto rows = csv_rows(slurp(dir / "r.csv"));
  CHECK(rows.size() == 11);
  CHECK(slurp(dir / "r.csv").find("# replications = 10") != std::string::npos);
}

TEST_CASE("exit codes") {
  TempDir dir;
  CHECK(cli({}).code == 1);
  CHECK(cli({"fly"}).code == 1);
  CHECK(cli({"estimate", "--bogus", "1"}).code == 1);
  CHECK(cli({"--help"}).code == 0);
  CHECK(cli({"estimate", "--input", dir / "missing.csv", "--x", "0", "--h", "0.1", "--eta", "0.5"}).code == 2);
  CHECK(cli({"estimate", "--input", dir / "missing.csv", "--x", "0", "--h", "0.1", "--eta", "1.5"}).code == 1);
  {
    std::ofstream bad(dir / "bad.csv");
    bad << "t,x\n0,0\n0.5,0\n1.2,0\n";
  }
  const auto irregular = cli({"estimate", "--input", dir / "bad.csv", "--x", "0", "--h", "0.1", "--eta", "0.5"});
  CHECK(irregular.code == 2);
  CHECK(irregular.err.find("row 3") != std::string::npos);

  REQUIRE(cli({"simulate", "--n", "500", "--output", dir / "obs.csv"}).code == 0);
  CHECK(cli({"estimate", "--input", dir / "obs.csv", "--x", "40", "--h", "0.1", "--eta", "0.5",
             "--output", dir / "e.csv"})
            .code == 3);
  CHECK(cli({"simulate", "--config", dir / "nope.cfg"}).code == 2);
}

}  // TEST_SUITE
