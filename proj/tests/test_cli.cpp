#include "sweep/cli.hpp"
#include "sweep/io.hpp"

#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <sstream>

using namespace sweep;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "sweep");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("sweep_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(SWEEP_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("argument parsing") {
  RunConfig c = parse_args({"optimize", "--spec", "builtin:example83", "--reference", "builtin:example83-case-i",
                            "--k", "50", "--epsilon", "inf", "--tol", "1e-7", "--seed", "3"});
  CHECK(c.subcommand == "optimize");
  CHECK(c.k == 50);
  CHECK(c.epsilon == "inf");
  REQUIRE(c.tol.has_value());
  CHECK(*c.tol == 1e-7);
  CHECK(c.seed == 3u);
  RunConfig v = parse_args({"convergence", "--spec", "s.json", "--reference", "r.csv", "--ks", "10,20,40"});
  CHECK(v.ks == std::vector<int>{10, 20, 40});
  CHECK_FALSE(v.tol.has_value());
}

TEST_CASE("usage errors") {
  auto code = [](std::vector<std::string> a) {
    try {
      parse_args(a);
    } catch (const UsageError& e) {
      return e.code();
    }
    return -1;
  };
  CHECK(code({"--help"}) == 0);
  CHECK(code({}) == kExitUsage);
  CHECK(code({"optimize", "--reference", "r.csv"}) == kExitUsage);
  CHECK(code({"launch"}) == kExitUsage);
  CHECK(code({"example83", "--case", "iv"}) == kExitUsage);
  CHECK(code({"simulate", "--spec", "builtin:example83", "--k", "0"}) == kExitUsage);
  CHECK(code({"check-kkt", "--spec", "builtin:example83", "--solution", "x.csv", "--mode", "both"}) == kExitUsage);
}

TEST_CASE("binary exit codes") {
  CHECK(run_binary("--help") == 0);
  CHECK(run_binary("optimize") == 2);
  CHECK(run_binary("simulate --spec /nonexistent/spec.json") == 2);
  CHECK(run_binary("example83 --case iii --out " + scratch("bin")) == 0);
}

TEST_CASE("closed-form summary") {
  const std::string dir = scratch("example83");
  Outcome o = invoke({"example83", "--out", dir});
  REQUIRE(o.code == 0);
  json s = json::parse(read_file(dir + "/summary.json"));
  CHECK(s["best_case"] == "ii");
  CHECK(std::abs(s["cases"]["i"]["v2"].get<double>() - 0.5988481275) <= 1e-6);
  CHECK(std::abs(s["cases"]["ii"]["v2"].get<double>() - 1.056787399) <= 1e-6);
  CHECK(s["cases"]["iii"]["certificate"]["all_pass"] == true);
  const std::string csv = read_file(dir + "/analytic.csv");
  CHECK(csv.rfind("case,t,x1,x2,y1,y2,a1,a2,x3\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 3 * 201);
  CHECK(fs::exists(dir + "/cost-curve.csv"));
}

TEST_CASE("continuous check of the exact mode") {
  const std::string dir = scratch("kkt_cont");
  Outcome o = invoke({"check-kkt", "--spec", "builtin:example83", "--solution", "builtin:example83-case-iii", "--mode",
                      "continuous", "--tol", "1e-6", "--out", dir});
  CHECK(o.code == 0);
  json r = json::parse(read_file(dir + "/report.json"));
  CHECK(r["report"]["all_pass"] == true);
  Outcome bad = invoke({"check-kkt", "--spec", "builtin:example83", "--solution", dir + "/none.csv", "--mode",
                        "continuous", "--out", dir});
  CHECK(bad.code == kExitUsage);
}

TEST_CASE("optimize then verify the discrete conditions") {
  const std::string dir = scratch("opt");
  Outcome o = invoke({"optimize", "--spec", "builtin:example83", "--reference", "builtin:example83-case-i", "--k", "10",
                      "--epsilon", "inf", "--tol", "1e-10", "--out", dir});
  REQUIRE(o.code == 0);
  json rep = json::parse(read_file(dir + "/report.json"));
  CHECK(rep.dump().find("\"converged\":true") != std::string::npos);
  Trajectory sol = read_trajectory_csv(dir + "/solution.csv");
  CHECK(sol.k() == 10);
  Outcome k = invoke({"check-kkt", "--spec", "builtin:example83", "--solution", dir + "/solution.csv", "--reference",
                      "builtin:example83-case-i", "--epsilon", "inf", "--tol", "1e-6", "--out", dir});
  CHECK(k.code == 0);
  Outcome loose = invoke({"check-kkt", "--spec", "builtin:example83", "--solution", dir + "/solution.csv", "--reference",
                          "builtin:example83-case-ii", "--epsilon", "inf", "--tol", "1e-6", "--out", dir});
  CHECK(loose.code == kExitNumeric);
}

TEST_CASE("simulation output is deterministic") {
  const std::string a = scratch("det_a"), b = scratch("det_b");
  REQUIRE(invoke({"simulate", "--spec", "builtin:example83", "--k", "40", "--out", a}).code == 0);
  REQUIRE(invoke({"simulate", "--spec", "builtin:example83", "--k", "40", "--out", b}).code == 0);
  CHECK(read_file(a + "/trajectory.csv") == read_file(b + "/trajectory.csv"));
  CHECK(read_file(a + "/report.json") == read_file(b + "/report.json"));
}

TEST_CASE("stationary spec file simulates to constant rows") {
  const std::string dir = scratch("still");
  write_file(dir + "/spec.json", R"({"x0": [1, 2], "set": {"kind": "orthant"}})");
  REQUIRE(invoke({"simulate", "--spec", dir + "/spec.json", "--k", "8", "--out", dir}).code == 0);
  Trajectory t = read_trajectory_csv(dir + "/trajectory.csv");
  REQUIRE(t.k() == 8);
  for (const Node& z : t.nodes) {
    CHECK(z.x[0] == 1.0);
    CHECK(z.x[1] == 2.0);
  }
}

TEST_CASE("reconstruction of the exact mode") {
  const std::string dir = scratch("rec");
  REQUIRE(invoke({"reconstruct", "--spec", "builtin:example83", "--reference", "builtin:example83-case-iii", "--k",
                  "20", "--out", dir})
              .code == 0);
  Trajectory t = read_trajectory_csv(dir + "/trajectory.csv");
  for (int j = 0; j <= 20; ++j) CHECK(std::abs(t.nodes[j].x[0] - (1 - t.mesh.t[j])) < 1e-12);
}

TEST_CASE("convergence table") {
  const std::string dir = scratch("conv");
  Outcome o = invoke({"convergence", "--spec", "builtin:example83", "--reference", "builtin:example83-case-iii", "--ks",
                      "5,10", "--out", dir});
  CHECK(o.code == 0);
  const std::string csv = read_file(dir + "/convergence.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}
