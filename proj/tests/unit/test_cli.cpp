#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "mergo/cli.hpp"

using namespace mergo;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream o, e;
  int c = cli::dispatch(args, o, e);
  return {c, o.str(), e.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::filesystem::path temp_dir(const std::string& name) {
  auto d = std::filesystem::temp_directory_path() / ("mergo_cli_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(d);
  std::filesystem::create_directories(d);
  return d;
}

}  // namespace

TEST(Cli, SieveRows) {
  auto r = run({"sieve", "--fn", "mobius", "--n", "100"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 101);
  EXPECT_EQ(r.out.rfind("n,value_re,value_im\n1,1,0\n2,-1,0\n", 0), 0u);
}

TEST(Cli, CustomFunctionMatchesMobius) {
  auto a = run({"sieve", "--fn", "custom", "--custom", "-1,0", "--n", "500"});
  auto b = run({"sieve", "--fn", "mobius", "--n", "500"});
  EXPECT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run({"norm", "--s", "9", "--n", "64"}).code, 4);
  EXPECT_EQ(run({"gvnt", "--mode", "u", "--polys", "y,2y"}).code, 3);
  EXPECT_EQ(run({"sieve", "--fn", "mobius"}).code, 2);
  EXPECT_EQ(run({"sieve", "--fn", "mobius", "--n", "10", "--bogus", "1"}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"unorm", "--fn", "random", "--s", "3", "--n", "16"}).code, 2);  // seed required
  EXPECT_EQ(run({"swcheck", "--fn", "mobius", "--n", "2", "--A", "1"}).code, 3);
  EXPECT_EQ(run({"pet", "--polys", "y^3, 2y^3"}).code, 4);  // needs more than 64 steps
  EXPECT_EQ(run({"vinogradov", "--alpha", "0.3", "--beta", "0.1", "--eta", "0.01", "--J", "3"}).code, 3);
}

TEST(Cli, JsonPayloads) {
  auto sw = cli::json::parse(run({"swcheck", "--fn", "one", "--n", "100", "--A", "1"}).out);
  EXPECT_EQ(sw["max"].get<double>(), 100.0);
  EXPECT_EQ(sw["q"].get<int>(), 1);
  auto pet = cli::json::parse(run({"pet", "--polys", "y, y^2"}).out);
  EXPECT_EQ(pet["s"].get<int>(), 5);
  auto lin = cli::json::parse(run({"pet", "--polys", "y, 2y, 3y", "--h", "5"}).out);
  EXPECT_EQ(lin["s"].get<int>(), 3);
  EXPECT_TRUE(lin["steps"].empty());
  auto g = cli::json::parse(run({"gvnt", "--mode", "U", "--polys", "y,2y", "--n", "64", "--theta", "one"}).out);
  EXPECT_NEAR(g["norm_value"].get<double>(), 1.0, 1e-12);
  EXPECT_EQ(g["s_or_d"].get<int>(), 2);
}

TEST(Cli, Determinism) {
  std::vector<std::string> a{"unorm", "--fn", "random", "--seed", "42", "--n", "48", "--s", "3"};
  auto x = run(a), y = run(a);
  EXPECT_EQ(x.code, 0);
  EXPECT_EQ(x.out, y.out);
  auto z = run({"unorm", "--fn", "random", "--seed", "43", "--n", "48", "--s", "3"});
  EXPECT_NE(x.out, z.out);
}

TEST(Cli, SourcesAgree) {
  auto d = temp_dir("src");
  auto path = (d / "mu.csv").string();
  ASSERT_EQ(run({"sieve", "--fn", "mobius", "--n", "64", "--out", path}).code, 0);
  auto a = run({"norm", "--fn", "file:" + path, "--n", "64", "--s", "2"});
  auto b = run({"norm", "--fn", "mobius", "--n", "64", "--s", "2"});
  EXPECT_EQ(a.out, b.out);
  auto ph = run({"unorm", "--fn", "phase:c1=0.25,c2=0.125", "--n", "32", "--s", "3"});
  EXPECT_GT(cli::json::parse(ph.out)["value"].get<double>(), 0.999);
  EXPECT_EQ(run({"norm", "--fn", "decomposed:mobius.g1", "--n", "32", "--s", "2"}).code, 0);
  EXPECT_EQ(run({"norm", "--fn", "nonsense", "--n", "32", "--s", "2"}).code, 2);
  std::filesystem::remove_all(d);
}

TEST(Cli, OutEnvelope) {
  auto d = temp_dir("env");
  auto path = (d / "sub" / "p.json").string();
  auto r = run({"swcheck", "--fn", "mobius", "--n", "1000", "--A", "1", "--out", path});
  ASSERT_EQ(r.code, 0);
  auto env = cli::json::parse(r.out);
  EXPECT_EQ(env["payload"]["path"].get<std::string>(), path);
  EXPECT_EQ(env["tool_version"].get<std::string>(), cli::kToolVersion);
  EXPECT_TRUE(env.contains("wall_time"));
  EXPECT_EQ(cli::json::parse(slurp(path))["n"].get<int>(), 1000);
  std::filesystem::remove_all(d);
}

TEST(Cli, Manifest) {
  auto d = temp_dir("man");
  {
    std::ofstream(d / "empty.json") << "[]";
    std::ofstream(d / "bad.json") << "[{";
    std::ofstream(d / "unknown.json") << R"([{"command":"sieve","params":{"fn":"mobius","n":5},"colour":1}])";
    std::ofstream(d / "abort.json")
        << R"([{"command":"sieve","params":{"fn":"mobius","n":5},"out":"a.csv"},)"
        << R"({"command":"norm","params":{"s":9},"out":"b.json"},)"
        << R"({"command":"sieve","params":{"fn":"mobius","n":5},"out":"c.csv"}])";
    std::ofstream(d / "ok.json")
        << R"([{"command":"ergodic","params":{"system":"product:3,5","theta":"one","schedule":"list:15,30"},"out":"e.csv"},)"
        << R"({"command":"norm","params":{"fn":"random","n":20,"s":3},"seed":9,"out":"n.json"}])";
  }
  auto e = run({"manifest", (d / "empty.json").string(), "--outdir", (d / "o").string()});
  EXPECT_EQ(e.code, 0);
  EXPECT_EQ(e.out, "index,command,exit_code,out\n");
  EXPECT_EQ(run({"manifest", (d / "bad.json").string()}).code, 2);
  EXPECT_EQ(run({"manifest", (d / "unknown.json").string()}).code, 2);
  auto ab = run({"manifest", (d / "abort.json").string(), "--outdir", (d / "o").string()});
  EXPECT_EQ(ab.code, 4);
  EXPECT_TRUE(std::filesystem::exists(d / "o" / "a.csv"));
  EXPECT_FALSE(std::filesystem::exists(d / "o" / "c.csv"));
  EXPECT_NE(ab.out.find("1,norm,4,b.json"), std::string::npos);
  ASSERT_EQ(run({"manifest", (d / "ok.json").string(), "--outdir", (d / "r1").string()}).code, 0);
  ASSERT_EQ(run({"manifest", (d / "ok.json").string(), "--outdir", (d / "r2").string()}).code, 0);
  for (auto f : {"e.csv", "n.json"}) {
    EXPECT_EQ(slurp(d / "r1" / f), slurp(d / "r2" / f)) << f;
    EXPECT_FALSE(slurp(d / "r1" / f).empty());
  }
  // full periods of the product system: the average of e(a/3) e(b/5) over 15 steps vanishes
  auto csv = slurp(d / "r1" / "e.csv");
  EXPECT_EQ(csv.rfind("x,N,value_re,value_im\n", 0), 0u);
  std::filesystem::remove_all(d);
}
