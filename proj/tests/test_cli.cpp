#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string out;
};

Run run(const std::string& args) {
  Run r;
  const std::string cmd = std::string(TEXTDIV_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* p = ::popen(cmd.c_str(), "r");
  char buf[4096];
  while (auto n = std::fread(buf, 1, sizeof buf, p)) r.out.append(buf, n);
  const int st = ::pclose(p);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

fs::path workdir() {
  auto d = fs::temp_directory_path() / "textdiv_cli";
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

const std::string kBands = std::string(TEXTDIV_TEST_DATA) + "/bands.jsonl";

}  // namespace

TEST(Cli, IngestThenStats) {
  const auto d = workdir();
  const auto clean = (d / "clean.jsonl").string();
  auto r = run("ingest --in " + kBands + " --filter --dedup --out " + clean);
  ASSERT_EQ(r.status, 0);
  std::ifstream in(clean);
  std::size_t lines = 0;
  for (std::string l; std::getline(in, l);) lines += !l.empty();
  EXPECT_EQ(lines, 7u);

  r = run("stats --in " + clean + " --bucket 20 --histogram-svg " + (d / "h.svg").string());
  ASSERT_EQ(r.status, 0);
  auto j = json::parse(r.out);
  EXPECT_EQ(j["count"], 7);
  EXPECT_EQ(j["histogram"].size(), 4u);
  EXPECT_NE(slurp(d / "h.svg").find("<svg"), std::string::npos);
}

TEST(Cli, GenerateDiversityJudge) {
  const auto d = workdir();
  const auto out = (d / "gen.jsonl").string();
  auto r = run("generate --corpus " + kBands + " --technique adaptive_bias --seed 5 --n-out " + out);
  ASSERT_EQ(r.status, 0);
  EXPECT_TRUE(fs::exists(out + ".manifest.json"));
  const auto first = slurp(out);
  ASSERT_EQ(run("generate --corpus " + kBands + " --technique adaptive_bias --seed 5 --n-out " + out).status, 0);
  EXPECT_EQ(slurp(out), first);

  r = run("diversity --input " + out + " --n 3");
  ASSERT_EQ(r.status, 0);
  auto j = json::parse(r.out);
  EXPECT_GE(j["mean_diversity"].get<double>(), 0.0);
  EXPECT_LE(j["mean_diversity"].get<double>(), 1.0);

  r = run("judge --corpus " + out + " --records " + kBands);
  ASSERT_EQ(r.status, 0);
  j = json::parse(r.out);
  EXPECT_GT(j["scored"].get<int>(), 0);
  EXPECT_EQ(j["failed"], 0);
}

TEST(Cli, Highlight) {
  const auto d = workdir();
  std::ofstream(d / "a.txt") << "the band plays jazz at weddings\n";
  std::ofstream(d / "b.txt") << "our band plays jazz at parties\n";
  auto r = run("highlight --a " + (d / "a.txt").string() + " --b " + (d / "b.txt").string() + " --format json");
  ASSERT_EQ(r.status, 0);
  auto j = json::parse(r.out);
  EXPECT_EQ(j["a"]["id"], "a");
  EXPECT_FALSE(j["a"]["spans"].empty());
  r = run("highlight --a " + (d / "a.txt").string() + " --b " + (d / "b.txt").string() + " --format ansi");
  EXPECT_NE(r.out.find("\x1b[7m"), std::string::npos);
}

TEST(Cli, Errors) {
  EXPECT_NE(run("diversity --input /nonexistent.jsonl").status, 0);
  EXPECT_NE(run("generate --corpus " + kBands + " --technique bogus --n-out /tmp/x.jsonl").status, 0);
  EXPECT_NE(run("").status, 0);
}
