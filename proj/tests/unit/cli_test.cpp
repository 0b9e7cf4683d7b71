#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

struct Outcome {
  int status = -1;
  std::string out;  // stdout and stderr
};

Outcome hmix(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + HMIX_CLI + std::string(" ") + args + " 2>&1";
  Outcome o;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return o;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) o.out.append(buf.data(), n);
  const int raw = ::pclose(pipe);
  o.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return o;
}

std::string config(const std::string& name) { return std::string(HMIX_CONFIG_DIR) + "/" + name; }

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("hmix_cli_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::FILE* f = std::fopen(e.path().c_str(), "rb");
    std::string s;
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = std::fread(buf.data(), 1, buf.size(), f)) > 0) s.append(buf.data(), n);
    std::fclose(f);
    out[fs::relative(e.path(), root).string()] = s;
  }
  return out;
}

}  // namespace

TEST(Cli, SeqBuildClosedForm) {
  auto o = hmix("seq build --closed-form --p 2 --depth 4");
  ASSERT_EQ(o.status, 0) << o.out;
  Json j = Json::parse(o.out);
  EXPECT_EQ(j["terms"], (Json{"4", "16", "256", "65536"}));
}

TEST(Cli, SeqBuildTheoremAPrime) {
  auto o = hmix("seq build --prime --rate-b 1/N --rate-h N --n1 4 --depth 4");
  ASSERT_EQ(o.status, 0) << o.out;
  EXPECT_EQ(Json::parse(o.out)["terms"], (Json{"4", "16", "256", "65536"}));
}

TEST(Cli, SeqValidateFailsWithExitOne) {
  EXPECT_EQ(hmix("seq validate --terms 4 16 256 --p 2").status, 0);
  EXPECT_EQ(hmix("seq validate --terms 4 15 --p 2").status, 1);
}

TEST(Cli, MixingBoundAtLagTen) {
  auto o = hmix("mixing bound --lag 10 --p 2 --depth 4");
  ASSERT_EQ(o.status, 0) << o.out;
  Json e = Json::parse(o.out)["result"]["entries"][0];
  EXPECT_EQ(e["head"]["exact"], "4353/16384");
  EXPECT_EQ(e["head"]["approx"].get<double>(), 0.26568603515625);
  EXPECT_EQ(e["tail"]["exact"], "4/4294967295");
}

TEST(Cli, MixingExactTiny) {
  auto o = hmix("mixing exact --n 2 -m 0 -g 1");
  ASSERT_EQ(o.status, 0) << o.out;
  Json r = Json::parse(o.out)["result"];
  EXPECT_EQ(r["beta"]["exact"], "421/2048");
  EXPECT_EQ(r["kind"], "windowed");
}

TEST(Cli, ScalingSqrtNIsNonVanishing) {
  auto o = hmix("diagnose scaling --c sqrtN");
  ASSERT_EQ(o.status, 0) << o.out;
  Json r = Json::parse(o.out)["result"];
  EXPECT_EQ(r["verdict"], "non-vanishing");
  EXPECT_FALSE(r["witness"].empty());
}

TEST(Cli, VarianceTwoTermSequence) {
  auto o = hmix("variance --terms 2 4 --p 2 -N 4");
  ASSERT_EQ(o.status, 0) << o.out;
  EXPECT_NE(o.out.find("\"25/4\""), std::string::npos);
}

TEST(Cli, ExitCodes) {
  auto p1 = hmix("run " + config("invalid_p1.json") + " --output-dir " + scratch("p1").string());
  EXPECT_EQ(p1.status, 1);
  EXPECT_NE(p1.out.find("condition (C)"), std::string::npos) << p1.out;
  EXPECT_EQ(hmix("simulate -N 70000 --seed 1 -R 1").status, 2);
  EXPECT_EQ(hmix("variance --no-such-flag").status, 1);
  EXPECT_EQ(hmix("seq build --closed-form --recursive").status, 1);
  EXPECT_EQ(hmix("run /nonexistent/config.json").status, 1);
}

TEST(Cli, RunIsReproducibleAndFlagsOverride) {
  const fs::path a = scratch("run_a"), b = scratch("run_b");
  const std::string common = "run " + config("closed_form_p2.json") + " -R 300 --seed 5";
  ASSERT_EQ(hmix(common + " --threads 1 --output-dir " + a.string()).status, 0);
  ASSERT_EQ(hmix(common + " --threads 3", "HMIX_OUTPUT_DIR=" + b.string()).status, 0);
  auto ta = tree(a), tb = tree(b);
  EXPECT_EQ(ta, tb);
  Json manifest = Json::parse(ta.at("manifest.json"));
  EXPECT_EQ(manifest["seed"], 5);
  EXPECT_EQ(manifest["effective_config"]["replicates"], 300);

  auto rep = hmix("report " + a.string());
  ASSERT_EQ(rep.status, 0) << rep.out;
  EXPECT_TRUE(fs::exists(a / "summary.json"));

  // Mixing outputs of a different config into the directory is refused.
  const fs::path c = scratch("run_c");
  ASSERT_EQ(hmix("run " + config("closed_form_p2.json") + " -R 300 --seed 6 --output-dir " + c.string()).status, 0);
  fs::copy_file(c / "variance.json", a / "other_variance.json");
  auto mixed = hmix("report " + a.string());
  EXPECT_EQ(mixed.status, 1);
  EXPECT_NE(mixed.out.find("HashMismatch"), std::string::npos);
  for (const auto& d : {a, b, c}) fs::remove_all(d);
}
