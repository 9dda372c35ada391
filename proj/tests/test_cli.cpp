#include <filesystem>
#include <fstream>
#include <sstream>

#include "catch_amalgamated.hpp"

#include "chemofront/cli.hpp"

using namespace chemofront;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli_main(std::move(args), out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("chemofront_cli_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string config_path(const std::string& name) { return std::string(CHEMOFRONT_SOURCE_DIR) + "/configs/" + name; }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p);
  std::ostringstream s;
  s << is.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("check on the weak-weak fixture") {
  const auto r = cli({"check", "--config", config_path("weak_weak.cfg")});
  CHECK(r.code == 0);
  CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("H1          true"));
  CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("H2          true"));
  CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("\"h2\": true"));
}

TEST_CASE("eigen prints the critical length") {
  const auto r = cli({"eigen", "--set", "eigen.d0=1", "--set", "eigen.a0=1"});
  CHECK(r.code == 0);
  CHECK_THAT(r.out, Catch::Matchers::StartsWith("problem,d0,c,a0,len,lambda,lstar\n"));
  CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("1.57079632679"));
  const auto never = cli({"eigen", "--set", "eigen.c=2"});
  CHECK_THAT(never.out, Catch::Matchers::ContainsSubstring("never_positive"));
}

TEST_CASE("input errors exit with 1") {
  const auto dir = scratch_dir("errors");
  const auto zero = cli({"simulate", "--out", dir.string(), "--set", "init.amplitude=0"});
  CHECK(zero.code == 1);
  CHECK_THAT(zero.err, Catch::Matchers::ContainsSubstring("positive"));
  const auto unknown = cli({"simulate", "--out", dir.string(), "--set", "scheme.gridN=64"});
  CHECK(unknown.code == 1);
  CHECK_THAT(unknown.err, Catch::Matchers::ContainsSubstring("scheme.gridN"));
  CHECK(cli({"check", "--config", "/nonexistent.cfg"}).code == 1);
  CHECK(cli({"frobnicate"}).code == 1);
  CHECK(cli({"check", "--set", "noequals"}).code == 1);
  std::filesystem::remove_all(dir);
}

TEST_CASE("scheme failures exit with 2") {
  const auto dir = scratch_dir("failure");
  const auto r = cli({"simulate", "--out", dir.string(), "--set", "scheme.front_speed_cap=0.01", "--set",
                      "scheme.grid_n=64", "--set", "run.t_end=1"});
  CHECK(r.code == 2);
  CHECK_THAT(r.err, Catch::Matchers::ContainsSubstring("scheme failure"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("simulate writes diagnostics and snapshots") {
  const auto dir = scratch_dir("simulate");
  const auto r = cli({"simulate", "--config", config_path("smoke.cfg"), "--out", dir.string(), "--set", "run.t_end=1",
                      "--set", "scheme.grid_n=64", "--set", "run.snapshot_times=0.5,1"});
  REQUIRE(r.code == 0);
  CHECK_THAT(slurp(dir / "diagnostics.csv"),
             Catch::Matchers::StartsWith("t,h,hprime,sup_u,sup_v,min_u_probe,min_v_probe,mass_u,mass_v\n"));
  CHECK(std::filesystem::exists(dir / "snapshot_0.csv"));
  CHECK(std::filesystem::exists(dir / "snapshot_1.csv"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("classify is deterministic and its record reloads") {
  const auto a = scratch_dir("classify_a");
  const auto b = scratch_dir("classify_b");
  const std::vector<std::string> extra{"--set", "rule.T_max=5", "--set", "scheme.grid_n=64"};
  auto args = [&](const std::filesystem::path& dir) {
    std::vector<std::string> v{"classify", "--config", config_path("smoke.cfg"), "--out", dir.string()};
    v.insert(v.end(), extra.begin(), extra.end());
    return v;
  };
  const auto ra = cli(args(a));
  const auto rb = cli(args(b));
  REQUIRE(ra.code == 0);
  REQUIRE(rb.code == 0);
  CHECK(slurp(a / "record.json") == slurp(b / "record.json"));
  const auto reload = cli({"classify", "--record", (a / "record.json").string()});
  CHECK(reload.code == 0);
  CHECK(reload.out == ra.out);
  std::filesystem::remove_all(a);
  std::filesystem::remove_all(b);
}

TEST_CASE("sweep writes records and a summary") {
  const auto dir = scratch_dir("sweep");
  const auto r = cli({"sweep", "--out", dir.string(), "--jobs", "2", "--set", "rule.T_max=3", "--set", "scheme.grid_n=64",
                      "--set", "sweep.mu=0.5,1", "--set", "sweep.h0=1,2"});
  REQUIRE(r.code == 0);
  CHECK(std::filesystem::exists(dir / "summary.csv"));
  CHECK(std::filesystem::exists(dir / "advisories.txt"));
  CHECK(std::filesystem::exists(dir / "records" / "run_0003.json"));
  CHECK_THAT(slurp(dir / "summary.csv"), Catch::Matchers::StartsWith("index,mu,h0,outcome"));
  CHECK(cli({"sweep", "--out", dir.string()}).code == 1);  // no axes
  std::filesystem::remove_all(dir);
}

TEST_CASE("oracle cases") {
  const auto ww = cli({"oracle", "--case", "lv_weak_weak"});
  CHECK(ww.code == 0);
  CHECK_THAT(ww.out, Catch::Matchers::ContainsSubstring("u 0.666666"));
  CHECK(cli({"oracle", "--case", "eigen_fd", "--seed", "3"}).code == 0);
  CHECK(cli({"oracle", "--case", "eigen_fd", "--seed", "3"}).out == cli({"oracle", "--case", "eigen_fd", "--seed", "3"}).out);
  CHECK(cli({"oracle", "--case", "decoupled_logistic"}).code == 0);
  CHECK(cli({"oracle", "--case", "nope"}).code == 1);
}

TEST_CASE("no side effects outside the output directory") {
  const auto dir = scratch_dir("sidefx");
  const auto before = std::distance(std::filesystem::directory_iterator(std::filesystem::current_path()), {});
  CHECK(cli({"eigen"}).code == 0);
  CHECK(cli({"check"}).code == 0);
  CHECK(cli({"eigen", "--out", dir.string()}).code == 0);
  CHECK(std::filesystem::exists(dir / "eigen.csv"));
  const auto after = std::distance(std::filesystem::directory_iterator(std::filesystem::current_path()), {});
  CHECK(before == after);
  std::filesystem::remove_all(dir);
}
