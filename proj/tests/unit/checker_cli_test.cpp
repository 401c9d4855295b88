// Copyright 2026 The vcm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "vcm/check/check.hpp"
#include "vcm/sim/trace.hpp"

namespace vcm {
namespace {

namespace fs = std::filesystem;

std::string fixture(const std::string& name) { return std::string(VCM_FIXTURES) + "/" + name + ".trace"; }

TEST(CheckerFixtures, CleanTracesPass) {
  for (const char* name : {"clean", "clean_compensation"}) {
    auto t = sim::read_trace_file(fixture(name));
    ASSERT_TRUE(t.error.empty()) << t.error;
    auto rep = check::check_trace(t);
    for (const auto& r : rep.results) EXPECT_TRUE(r.pass) << name << " " << r.name << ": " << r.detail;
  }
}

class CorruptedTrace : public ::testing::TestWithParam<std::string> {};

TEST_P(CorruptedTrace, NamedPropertyFailsWithALine) {
  const auto& prop = GetParam();
  auto t = sim::read_trace_file(fixture(prop));
  ASSERT_TRUE(t.error.empty()) << t.error;
  auto rep = check::check_trace(t, {prop});
  ASSERT_EQ(rep.results.size(), 1u);
  EXPECT_FALSE(rep.results[0].pass);
  ASSERT_TRUE(rep.results[0].line);
  EXPECT_GT(*rep.results[0].line, 1u);
  EXPECT_FALSE(rep.passed());
}

std::string label(const ::testing::TestParamInfo<std::string>& info) {
  std::string s;
  for (char c : info.param) s += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
  return s;
}

INSTANTIATE_TEST_SUITE_P(EveryProperty, CorruptedTrace, ::testing::ValuesIn(check::property_names()), label);

TEST(CheckerFixtures, DuplicateViewIdNamesBothMemberSets) {
  auto rep = check::check_trace(sim::read_trace_file(fixture("5.3")), {"5.3"});
  EXPECT_NE(rep.results[0].detail.find("view 2 has members 1,2,3"), std::string::npos) << rep.results[0].detail;
}

TEST(CheckerFixtures, UnknownPropertyRejected) {
  EXPECT_THROW(check::resolve_properties({"5.9"}), std::invalid_argument);
  EXPECT_EQ(check::resolve_properties({"all"}).size(), check::property_names().size());
}

TEST(TraceParser, TruncatedTraceIsIncomplete) {
  auto t = sim::parse_trace("0.000000 0 config partitions=1\n1.000000 1 view id=1 members=1:g1 leader=1 rank=Leader gid=1\n");
  EXPECT_TRUE(t.error.empty());
  EXPECT_FALSE(t.complete);
  EXPECT_FALSE(check::check_trace(t).error.empty());
  EXPECT_FALSE(sim::parse_trace("not a record\n").error.empty());
}

// --- command line ---------------------------------------------------------------

struct Cmd {
  int rc;
  std::string out;
};

Cmd vcm(const std::string& args) {
  const std::string cmd = std::string(VCM_CLI) + " " + args + " 2>&1";
  Cmd c{-1, ""};
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return c;
  std::array<char, 4096> buf;
  while (auto n = fread(buf.data(), 1, buf.size(), p)) c.out.append(buf.data(), n);
  int status = pclose(p);
  c.rc = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return c;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("vcm_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
    return path(name);
  }
  fs::path dir_;
};

TEST_F(Cli, RunWritesACheckableTrace) {
  const std::string scn = std::string(VCM_EXAMPLES) + "/scenarios/basic.scn";
  auto run = vcm("run --scenario " + scn + " --trace-out " + path("t.trace"));
  EXPECT_EQ(run.rc, 0) << run.out;
  EXPECT_NE(run.out.find("status=quiescent"), std::string::npos);
  auto check = vcm("check --trace " + path("t.trace"));
  EXPECT_EQ(check.rc, 0) << check.out;
  EXPECT_NE(check.out.find("status=pass"), std::string::npos);
  auto report = vcm("report --trace " + path("t.trace"));
  EXPECT_EQ(report.rc, 0);
  EXPECT_NE(report.out.find("metric=detection kind=gsd"), std::string::npos) << report.out;
}

TEST_F(Cli, SeedOverrideChangesTheRecordedSeed) {
  const std::string scn = std::string(VCM_EXAMPLES) + "/scenarios/basic.scn";
  auto a = vcm("run --scenario " + scn + " --seed 99 --trace-out " + path("a.trace"));
  ASSERT_EQ(a.rc, 0);
  std::ifstream f(path("a.trace"));
  std::string first;
  std::getline(f, first);
  EXPECT_NE(first.find("seed=99"), std::string::npos) << first;
}

TEST_F(Cli, MalformedScenarioCitesTheLine) {
  auto scn = write("bad.scn", "[topology]\npartitions = 2\n[schedule]\n5 frobnicate gsd:1\n");
  auto r = vcm("run --scenario " + scn);
  EXPECT_EQ(r.rc, 2);
  EXPECT_NE(r.out.find("line 4"), std::string::npos) << r.out;
}

TEST_F(Cli, CheckFailsOnCorruptedTrace) {
  auto r = vcm("check --trace " + fixture("5.3") + " --props 5.3");
  EXPECT_EQ(r.rc, 1);
  EXPECT_NE(r.out.find("property=5.3 status=fail"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("line=105"), std::string::npos) << r.out;
}

TEST_F(Cli, CheckRejectsUnusableInput) {
  EXPECT_EQ(vcm("check --trace " + path("missing.trace")).rc, 2);
  EXPECT_EQ(vcm("check --trace " + fixture("clean") + " --props nonsense").rc, 2);
  auto partial = write("partial.trace", "0.000000 0 config partitions=1\n");
  EXPECT_EQ(vcm("check --trace " + partial).rc, 2);
}

TEST_F(Cli, MissingSubcommandIsAUsageError) { EXPECT_NE(vcm("").rc, 0); }

}  // namespace
}  // namespace vcm
