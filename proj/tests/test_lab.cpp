#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "spinwave/cli.hpp"
#include "spinwave/lab.hpp"

using namespace spinwave;
using namespace spinwave::lab;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag)
      : path(fs::temp_directory_path() / ("spinwave_lab_" + tag + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

int cli(std::vector<std::string> args, std::string* out = nullptr, std::string* err = nullptr) {
  args.insert(args.begin(), "spinwave-lab");
  std::vector<const char*> argv;
  for (auto& a : args) argv.push_back(a.c_str());
  std::ostringstream o, e;
  const int rc = run_cli(static_cast<int>(argv.size()), argv.data(), o, e);
  if (out) *out = o.str();
  if (err) *err = e.str();
  return rc;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    std::vector<std::string> f;
    std::size_t start = 0;
    for (;;) {
      const auto c = line.find(',', start);
      f.push_back(line.substr(start, c - start));
      if (c == std::string::npos) break;
      start = c + 1;
    }
    rows.push_back(f);
  }
  return rows;
}

}  // namespace

TEST(Config, TypedKeysAndRejection) {
  const std::vector<ParamSpec> specs{{"x_rad", ParamType::Real, 1.0, ""},
                                     {"n", ParamType::Int, 3, ""},
                                     {"mode", ParamType::String, "a", ""}};
  Config c(specs);
  EXPECT_EQ(c.real("x_rad"), 1.0);
  c.set_text("x_rad", "2.5e-1");
  EXPECT_EQ(c.real("x_rad"), 0.25);
  c.set_text("n", "-7");
  EXPECT_EQ(c.integer("n"), -7);
  c.set_text("mode", "b");
  EXPECT_EQ(c.text("mode"), "b");
  EXPECT_THROW(c.set_text("y", "1"), ValidationError);
  EXPECT_THROW(c.set_text("x_rad", "1.0abc"), ValidationError);
  EXPECT_THROW(c.set_text("x_rad", ""), ValidationError);
  EXPECT_THROW(c.set_text("x_rad", "inf"), ValidationError);
  EXPECT_THROW(c.set_text("n", "2.5"), ValidationError);
  EXPECT_THROW(c.set("n", 2.5), ValidationError);
  EXPECT_THROW(c.set("mode", 1), ValidationError);
  EXPECT_THROW(c.merge_file(json::array()), ValidationError);
  EXPECT_THROW(c.merge_file({{"bogus", 1}}), ValidationError);
  c.merge_file({{"x_rad", 3}, {"n", 4}});
  EXPECT_EQ(c.real("x_rad"), 3.0);
  EXPECT_EQ(c.count("n", 0, 10), 4);
  EXPECT_THROW(c.count("n", 5, 10), ValidationError);
  EXPECT_THROW(c.choice("mode", {"a"}), ValidationError);
  EXPECT_EQ(c.to_json()["n"], 4);
}

TEST(Scenarios, RegistryIsCompleteWithUniqueKeys) {
  const std::vector<std::string> names{"diffraction-orders", "steered-diffraction", "coincidence-map", "hom-dip",
                                       "hbt", "splitter-validation", "classical-hom", "fit-forms", "blazed",
                                       "rates", "stark-sweep", "phasematch-map", "repeater"};
  ASSERT_EQ(scenarios().size(), names.size());
  for (const auto& n : names) EXPECT_NE(find_scenario(n), nullptr) << n;
  EXPECT_EQ(find_scenario("nope"), nullptr);
  for (const auto& s : scenarios()) {
    EXPECT_FALSE(s.description.empty());
    std::set<std::string> seen;
    for (const auto& p : s.params) EXPECT_TRUE(seen.insert(p.key).second) << s.name << " " << p.key;
  }
}

TEST(Run, DeterministicOutputsAndManifest) {
  TempDir a("a"), b("b");
  RunRequest req{"repeater", "", {"trials=20000"}, a.path.string(), 7, true};
  const auto files = run(req);
  req.out_dir = b.path.string();
  run(req);
  ASSERT_GE(files.size(), 3u);
  for (const auto& f : fs::directory_iterator(a.path))
    EXPECT_EQ(slurp(f.path()), slurp(b.path / f.path().filename())) << f.path();

  const json m = json::parse(slurp(a.path / "repeater.manifest.json"));
  EXPECT_EQ(m["scenario"], "repeater");
  EXPECT_EQ(m["seed"], 7);
  EXPECT_EQ(m["inputs"]["trials"], 20000);
  EXPECT_TRUE(m["versions"].contains("spinwave-lab"));
  ASSERT_FALSE(m["outputs"].empty());
  EXPECT_EQ(m["outputs"][0]["file"], "repeater.csv");
  for (const auto& o : m["outputs"]) {
    const std::string bytes = slurp(a.path / o["file"].get<std::string>());
    EXPECT_EQ(o["crc32"], crc32_hex(bytes));
    EXPECT_EQ(o["rows"].get<std::size_t>() + 1, parse_csv(bytes).size());
  }
  EXPECT_EQ(m["hints"]["crc32"], crc32_hex(slurp(a.path / "repeater.gnuplot.txt")));
}

TEST(Run, SeedChangesMonteCarlo) {
  TempDir a("s1"), b("s2");
  run({"repeater", "", {"trials=20000"}, a.path.string(), 1, false});
  run({"repeater", "", {"trials=20000"}, b.path.string(), 2, false});
  EXPECT_NE(slurp(a.path / "repeater.manifest.json"), slurp(b.path / "repeater.manifest.json"));
}

TEST(Crc32, KnownVector) { EXPECT_EQ(crc32_hex("123456789"), "cbf43926"); }

TEST(Run, ConfigFileOverrides) {
  TempDir d("cfg");
  const fs::path cfg = d.path / "c.json";
  std::ofstream(cfg) << R"({"points": 5, "dk_max_rad_per_mm": 20.6})";
  run({"hom-dip", cfg.string(), {"pair_probability=0.05"}, d.path.string(), 1, false});
  const auto rows = parse_csv(slurp(d.path / "hom-dip.csv"));
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_NEAR(std::stod(rows.back()[1]), 0.6065306597126334, 1e-11);
  std::ofstream(cfg) << R"({"points": 5, "speed_of_light": 1})";
  EXPECT_THROW(run({"hom-dip", cfg.string(), {}, d.path.string(), 1, false}), ValidationError);
}

TEST(Scenario, HomDipMinimum) {
  TempDir d("hom");
  run({"hom-dip", "", {}, d.path.string(), 1, false});
  const json m = json::parse(slurp(d.path / "hom-dip.manifest.json"));
  EXPECT_NEAR(m["summary"]["g2_at_overlap"].get<double>(), 0.17238794920486145, 1e-12);
  EXPECT_LT(m["summary"]["max_abs_closed_vs_wick"].get<double>(), 1e-9);
  const auto rows = parse_csv(slurp(d.path / "hom-dip.csv"));
  // first data row is dk = 0, the minimum of the sweep
  double lo = 1e9;
  for (std::size_t i = 1; i < rows.size(); ++i) lo = std::min(lo, std::stod(rows[i][2]));
  EXPECT_EQ(lo, std::stod(rows[1][2]));
}

TEST(Scenario, RatesRatioGrows) {
  TempDir d("rates");
  run({"rates", "", {}, d.path.string(), 1, false});
  const auto rows = parse_csv(slurp(d.path / "rates.csv"));
  ASSERT_EQ(rows[0][5], "ratio_qm_us");
  for (std::size_t i = 3; i < rows.size(); ++i) EXPECT_GT(std::stod(rows[i][5]), std::stod(rows[i - 1][5]));
  EXPECT_EQ(rows[1][6], "");  // no guideline for l = 0
}

TEST(Scenario, StarkPoleRowIsBlank) {
  TempDir d("stark");
  // h-level pole at 0.75 A0 + 0.25 A1 = 2.58625 GHz
  run({"stark-sweep", "", {"detuning_min_ghz=2.58625", "detuning_max_ghz=3", "points=2"}, d.path.string(), 1, false});
  const auto rows = parse_csv(slurp(d.path / "stark-sweep.csv"));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1], (std::vector<std::string>{"2.58625", "", "", "", ""}));
  EXPECT_FALSE(rows[2][3].empty());
}

TEST(Cli, ExitCodes) {
  TempDir d("cli");
  std::string out, err;
  EXPECT_EQ(cli({"fit-forms", "--out", d.path.string()}, &out), kOk);
  EXPECT_NE(out.find("fit-forms.manifest.json"), std::string::npos);
  EXPECT_EQ(cli({"fit-forms", "--out", d.path.string(), "--set", "points=3", "alpha=20"}), kOk);
  EXPECT_EQ(cli({"nope"}, nullptr, &err), kUsage);
  EXPECT_NE(err.find("unknown scenario"), std::string::npos);
  EXPECT_EQ(cli({}), kUsage);
  EXPECT_EQ(cli({"fit-forms", "--bogus"}), kUsage);
  EXPECT_EQ(cli({"fit-forms", "--out", d.path.string(), "--set", "bogus=1"}, nullptr, &err), kUsage);
  EXPECT_NE(err.find("unknown config key"), std::string::npos);
  EXPECT_EQ(cli({"fit-forms", "--out", d.path.string(), "--set", "points=x"}), kUsage);
  EXPECT_EQ(cli({"fit-forms", "--out", d.path.string(), "--set", "points"}), kUsage);
  EXPECT_EQ(cli({"hom-dip", "--out", d.path.string(), "--set", "pair_probability=1.5"}), kUsage);
  EXPECT_EQ(cli({"fit-forms", "--out", d.path.string(), "--config", (d.path / "missing.json").string()}), kUsage);
  EXPECT_EQ(cli({"fit-forms", "--seed", "abc"}), kUsage);
  EXPECT_EQ(cli({"--help"}, &out), kOk);
  EXPECT_EQ(cli({"hbt", "--list-keys"}, &out), kOk);
  EXPECT_NE(out.find("nbar"), std::string::npos);
}
