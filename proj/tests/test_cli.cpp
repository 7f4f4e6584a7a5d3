#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <gtest/gtest.h>

#include "renoq/io.hpp"

using namespace renoq;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = RENOQ_CONFIG_DIR;

struct Run {
  int code = -1;
  std::string out;
};

Run cli(const std::string& args) {
  Run r;
  const std::string cmd = std::string(RENOQ_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  std::array<char, 4096> buf{};
  std::size_t got = 0;
  while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), got);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string config(const std::string& name) { return (kConfigs / name).string(); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name, const std::string& body) {
  const auto p = fs::temp_directory_path() / ("renoq_test_" + name);
  std::ofstream(p) << body;
  return p;
}

std::set<std::string> keys(const Json& j) {
  std::set<std::string> out;
  for (const auto& [k, _] : j.items()) out.insert(k);
  return out;
}

}  // namespace

TEST(Config, ParsesRenovation) {
  const auto cfg = load_config(config("option1_reference.json"));
  EXPECT_EQ(cfg.model, ModelKind::Renovation);
  EXPECT_EQ(cfg.renovation.capacity, 5);
  EXPECT_EQ(cfg.renovation.option, Option::Option1);
  ASSERT_TRUE(cfg.simulation.has_value());
  EXPECT_EQ(cfg.simulation->arrivals, 1000000);
  ASSERT_TRUE(cfg.calibration.has_value());
  EXPECT_TRUE(cfg.calibration->target.target_loss.has_value());
}

TEST(Config, ParsesRedProfile) {
  const auto cfg = load_config(config("red_profile.json"));
  EXPECT_EQ(cfg.model, ModelKind::Red);
  EXPECT_EQ(cfg.red.drop, red_drop_profile(2, 4, 0.5, 5));
}

TEST(Config, RejectsUnknownKeys) {
  EXPECT_THROW(parse_config(Json::parse(R"({"model":"red","params":{"lambda":1,"mu":1,"capacity":1,"drop":[0,1],"x":1}})")),
               ConfigParseError);
  EXPECT_THROW(parse_config(Json::parse(R"({"model":"renovation","params":{"lambda":1,"d":1,"capacity":1,"q":[1,0]},"extra":{}})")),
               ConfigParseError);
  EXPECT_THROW(parse_config(Json::parse(R"({"model":"renovation","params":{"lambda":1,"d":1,"capacity":1,"q":[1,0]},"simulation":{"reps":3}})")),
               ConfigParseError);
}

TEST(Config, RejectsWrongTypesAndModels) {
  EXPECT_THROW(parse_config(Json::parse(R"({"model":"renovation","params":{"lambda":"fast","d":1,"capacity":1,"q":[1,0]}})")),
               ConfigParseError);
  EXPECT_THROW(parse_config(Json::parse(R"({"model":"mm1","params":{}})")), ConfigParseError);
  EXPECT_THROW(parse_config(Json::parse(R"({"model":"red","params":{"lambda":1,"mu":1,"capacity":1}})")), ConfigParseError);
}

TEST(Report, RoundTripsAndKeysAreStable) {
  const auto a = analysis_report(analyze(load_config(config("classic.json")).renovation));
  const auto b = analysis_report(analyze(load_config(config("option2_reference.json")).renovation));
  EXPECT_EQ(keys(a), keys(b));
  EXPECT_EQ(Json::parse(a.dump()), a);
  RedModel tight{3, 1, 2, {0, 0, 1}};
  RedModel loose{1, 1, 5, red_drop_profile(2, 4, 0.5, 5)};
  const auto r1 = analysis_report(analyze_red(tight, 3));  // truncated pmf: moments are null
  const auto r2 = analysis_report(analyze_red(loose, 200));
  EXPECT_EQ(keys(r1), keys(r2));
  EXPECT_TRUE(r1["cl_moments"]["mean"].is_null());
  EXPECT_TRUE(r2["cl_moments"]["mean"].is_number());
}

TEST(Report, RealsKeepFullPrecision) {
  const double x = 0.1 + 0.2;
  EXPECT_EQ(Json::parse(Json(x).dump()).get<double>(), x);
  EXPECT_EQ(format_real(x), "0.30000000000000004");
  EXPECT_EQ(format_real(1.0 / 3.0), "0.33333333333333331");
}

TEST(Compare, CorruptedAnalyticPathFails) {
  const auto cfg = load_config(config("option1_reference.json"));
  auto sc = *cfg.simulation;
  sc.arrivals = 200000;
  const auto sim = simulate_renovation(cfg.renovation, sc);
  EXPECT_TRUE(all_contained(compare_renovation(analyze(cfg.renovation), sim)));
  auto corrupted = cfg.renovation;
  corrupted.q = {0.4, 0.2, 0.1, 0.1, 0.1, 0.1};
  EXPECT_FALSE(all_contained(compare_renovation(analyze(corrupted), sim)));
}

TEST(Cli, AnalyzeClassicLossIsBlocking) {
  const auto r = cli("analyze -c " + config("classic.json"));
  ASSERT_EQ(r.code, 0);
  const auto doc = Json::parse(r.out);
  EXPECT_EQ(doc["loss"]["pi"].get<double>(), doc["pn"].back().get<double>());
}

TEST(Cli, AnalyzeBalancedRedIsUniform) {
  const auto r = cli("analyze -c " + config("red_uniform.json"));
  ASSERT_EQ(r.code, 0);
  for (const auto& v : Json::parse(r.out)["pn"]) EXPECT_NEAR(v.get<double>(), 1.0 / 6.0, 1e-14);
}

TEST(Cli, AnalyzeMatchesGoldenFiles) {
  for (const auto& name : {"option1_reference", "option2_reference", "classic", "red_profile", "red_uniform"}) {
    const auto r = cli(std::string("analyze -c ") + config(std::string(name) + ".json"));
    ASSERT_EQ(r.code, 0) << name;
    EXPECT_EQ(r.out, slurp(kConfigs / "golden" / (std::string(name) + ".analyze.json"))) << name;
  }
}

TEST(Cli, CsvSeries) {
  auto r = cli("analyze -c " + config("classic.json") + " --format csv");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out.substr(0, 12), "index,value\n");
  r = cli("analyze -c " + config("red_profile.json") + " --format csv --series cl --kmax 7");
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 8);
  r = cli("simulate -c " + config("classic.json") + " --format csv --seed 9");
  EXPECT_EQ(r.out.substr(0, 27), "index,value,ci_half_width\n0");
}

TEST(Cli, SimulateIsReproducible) {
  const auto a = cli("simulate -c " + config("classic.json") + " --seed 77");
  const auto b = cli("simulate -c " + config("classic.json") + " --seed 77");
  const auto c = cli("simulate -c " + config("classic.json") + " --seed 78");
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out, c.out);
  const auto doc = Json::parse(a.out);
  EXPECT_EQ(doc["simulation"]["seed"].get<std::uint64_t>(), 77u);
  EXPECT_EQ(doc["flow"].size(), 10u);
}

TEST(Cli, CompareReferenceAndGridConfigs) {
  std::vector<fs::path> files{kConfigs / "classic.json", kConfigs / "red_profile.json"};
  for (const auto& e : fs::directory_iterator(kConfigs / "grid")) files.push_back(e.path());
  for (const auto& f : files) {
    const auto r = cli("compare -c " + f.string());
    EXPECT_EQ(r.code, 0) << f << "\n" << r.out;
    EXPECT_EQ(r.out.find("OUTSIDE"), std::string::npos) << f;
  }
  const auto j = cli("compare -c " + config("classic.json") + " --format json");
  EXPECT_TRUE(Json::parse(j.out)["all_contained"].get<bool>());
}

TEST(Cli, CalibrateRecoversReferenceTargets) {
  for (const auto* method : {"direct", "pso"}) {
    const auto r = cli(std::string("calibrate -c ") + config("option1_reference.json") + " --method " + method);
    ASSERT_EQ(r.code, 0);
    const auto doc = Json::parse(r.out);
    EXPECT_LE(doc["objective"].get<double>(), 1e-6) << method;
    EXPECT_LE(doc["evaluations"].get<int>(), 500);
    EXPECT_EQ(doc["method"], method);
    EXPECT_EQ(doc["trace"].size(), doc["evaluations"].get<std::size_t>());
  }
  const auto over = cli("calibrate -c " + config("option1_reference.json") + " --target-loss 1 --budget 50");
  EXPECT_TRUE(Json::parse(over.out)["budget_exhausted"].get<bool>());
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(cli("").code, 2);
  EXPECT_EQ(cli("analyze").code, 2);
  EXPECT_EQ(cli("analyze -c /nonexistent/config.json").code, 2);
  EXPECT_EQ(cli("analyze -c " + config("classic.json") + " --format xml").code, 2);
  EXPECT_EQ(cli("analyze -c " + scratch("malformed.json", "{\"model\": ").string()).code, 2);
  EXPECT_EQ(cli("analyze -c " + scratch("unknown.json", R"({"model":"renovation","params":{"lambda":1,"d":1,"capacity":1,"q":[1,0]},"plot":true})").string()).code, 2);
  EXPECT_EQ(cli("analyze -c " + scratch("badq.json", R"({"model":"renovation","params":{"lambda":1,"d":1,"capacity":1,"q":[0.5,0.4]}})").string()).code, 3);
  EXPECT_EQ(cli("analyze -c " + scratch("rate.json", R"({"model":"renovation","params":{"lambda":-1,"d":1,"capacity":1,"q":[1,0]}})").string()).code, 3);
  EXPECT_EQ(cli("simulate -c " + scratch("nosim.json", R"({"model":"renovation","params":{"lambda":1,"d":1,"capacity":1,"q":[1,0]}})").string()).code, 2);
  EXPECT_EQ(cli("calibrate -c " + scratch("notarget.json", R"({"model":"renovation","params":{"lambda":1,"d":1,"capacity":1,"q":[1,0]}})").string()).code, 3);
}
