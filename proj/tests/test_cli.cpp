#include "support.hpp"

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <set>

namespace {

struct CliRun {
  int status = -1;
  std::string out;
  nlohmann::json json() const { return nlohmann::json::parse(out); }
};

CliRun run(const std::string& args) {
  const std::string cmd = std::string(BKLAB_CLI) + " " + args + " 2>/dev/null";
  CliRun r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  while (size_t n = fread(buf.data(), 1, buf.size(), pipe)) r.out.append(buf.data(), n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string fx(const std::string& name) { return bktest::fixture(name); }

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("bklab_cli_" + name)).string();
}

}  // namespace

TEST(Cli, CheckValidModule) {
  const CliRun r = run("check " + fx("mstar.json"));
  ASSERT_EQ(r.status, 0);
  const auto j = r.json();
  EXPECT_TRUE(j["pass"]);
  EXPECT_TRUE(j["validation"]["pass"]);
  EXPECT_EQ(j["type"], nlohmann::json::parse("[[0,1]]"));
}

TEST(Cli, CheckStrongDetAndProperties) {
  const CliRun r = run("check " + fx("mstar.json") + " --strong-det --dieudonne --psi");
  ASSERT_EQ(r.status, 0);
  const auto j = r.json();
  EXPECT_TRUE(j["strong_det"]["pass"]);
  EXPECT_EQ(j["strong_det"]["eigen_dims"], nlohmann::json::parse("[[1,1]]"));
  EXPECT_TRUE(j.contains("dieudonne"));
  EXPECT_TRUE(j.contains("pair"));
}

TEST(Cli, CorruptedFixtureFails) {
  const CliRun r = run("check " + fx("corrupted_commutation.json"));
  EXPECT_EQ(r.status, 1);
  EXPECT_FALSE(r.json()["pass"]);
}

TEST(Cli, MalformedInput) {
  EXPECT_EQ(run("check " + fx("truncated.json")).status, 2);
  EXPECT_EQ(run("check /nonexistent/module.json").status, 2);
  EXPECT_EQ(run("").status, 2);
  EXPECT_EQ(run("enumerate --ctx C7").status, 2);
  EXPECT_EQ(run("locmodel convert " + fx("mstar.json") + " --target iw").status, 2);
}

TEST(Cli, PsiAndLocmodelCheck) {
  const CliRun p = run("psi " + fx("mstar.json"));
  ASSERT_EQ(p.status, 0);
  const std::string path = tmp_path("pair.json");
  std::ofstream(path) << p.out;
  const CliRun r = run("locmodel check " + path);
  ASSERT_EQ(r.status, 0);
  const auto j = r.json();
  EXPECT_TRUE(j["problems"].empty());
  EXPECT_TRUE(j["strong_det"]["pass"]);
  EXPECT_TRUE(j["kottwitz"]["dims"]);
  EXPECT_TRUE(j["kottwitz"]["symbolic"]);
  EXPECT_TRUE(j["wedge_zero"]);
  EXPECT_EQ(run("locmodel check " + fx("mstar.json")).json(), j);
}

TEST(Cli, IwahoriConvertRoundtrip) {
  const std::string pair = tmp_path("rt_pair.json"), iw = tmp_path("rt_iw.json");
  std::ofstream(pair) << run("psi " + fx("mstar.json")).out;
  const CliRun to = run("locmodel convert " + pair + " --target iw --eta 0");
  ASSERT_EQ(to.status, 0);
  std::ofstream(iw) << to.out;
  const CliRun back = run("locmodel convert " + iw + " --target pair");
  ASSERT_EQ(back.status, 0);
  EXPECT_EQ(back.json(), run("psi " + fx("mstar.json")).json());
}

TEST(Cli, Dieudonne) {
  const CliRun r = run("dieudonne " + fx("mstar.json"));
  ASSERT_EQ(r.status, 0);
  const auto j = r.json();
  EXPECT_TRUE(j["pass"]);
  EXPECT_TRUE(j.contains("rank_profile"));
  EXPECT_TRUE(j.contains("relations"));
}

TEST(Cli, EnumerateCounts) {
  const CliRun r = run("enumerate --ctx C1 --count-only");
  ASSERT_EQ(r.status, 0);
  const auto s = r.json()["stats"];
  EXPECT_EQ(s["candidates"], 17136);
  EXPECT_EQ(s["valid"], 1040);
}

TEST(Cli, CensusC1) {
  const CliRun r = run("census --ctx C1");
  ASSERT_EQ(r.status, 0);
  const auto j = r.json();
  EXPECT_TRUE(j["pass"]);
  EXPECT_EQ(j["valid"], 1040);
  EXPECT_EQ(j["strong_det"], 560);
  EXPECT_EQ(j["classes"]["lower_bound"], j["classes"]["upper_bound"]);
  EXPECT_EQ(j["classes"]["unknown_pairs"], 0);
  for (const auto& [name, tally] : j["properties"].items()) {
    if (tally.value("tally_only", false)) continue;
    EXPECT_EQ(tally["violations"], 0) << name;
  }
}

TEST(Cli, PropertiesReportTallyOnlyFailures) {
  const CliRun plain = run("check " + fx("vanishing_fv.json") + " --strong-det");
  EXPECT_EQ(plain.status, 0);
  const CliRun r = run("check " + fx("vanishing_fv.json") + " --properties");
  EXPECT_EQ(r.status, 1);
  const auto j = r.json();
  std::set<std::string> failed;
  for (const auto& p : j["properties"])
    if (!p["pass"].get<bool>()) {
      EXPECT_TRUE(p.value("tally_only", false)) << p.dump();
      failed.insert(p["name"].get<std::string>());
    }
  EXPECT_EQ(failed, (std::set<std::string>{"dieudonne_nondegenerate", "rank_sum"}));
}
