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

#include "vcm/sim/generator.hpp"
#include "vcm/sim/kernel.hpp"
#include "vcm/sim/scenario.hpp"

namespace vcm::sim {
namespace {

TEST(SimTime, ParseAndFormat) {
  EXPECT_EQ(SimTime::parse("1.5").us(), 1500000);
  EXPECT_EQ(SimTime::parse("0.000001").us(), 1);
  EXPECT_EQ(SimTime::parse("12").str(), "12.000000");
  EXPECT_EQ(SimTime::from_seconds(0.25), SimTime::millis(250));
  EXPECT_THROW(SimTime::parse("abc"), std::invalid_argument);
}

const char* kHeader = "[topology]\npartitions = 2\n[config]\nheartbeat_interval = 1\nheartbeat_timeout = 5\n[schedule]\n";

TEST(Scenario, ParsesTopologyConfigAndSchedule) {
  auto sc = parse_scenario(std::string(kHeader) + "20 crash_process gsd:2\n10 create_vms 1 3\n");
  EXPECT_EQ(sc.topology.partitions, 2u);
  EXPECT_EQ(sc.config.heartbeat.timeout, SimTime::seconds(5));
  ASSERT_EQ(sc.schedule.size(), 2u);
  EXPECT_EQ(sc.schedule[0].verb, Verb::CreateVms);  // sorted by time
  EXPECT_EQ(sc.schedule[1].target->kind, TargetKind::Gsd);
  EXPECT_EQ(sc.schedule[1].target->id, 2u);
  EXPECT_EQ(sc.schedule[1].line, 7u);
}

TEST(Scenario, ErrorsCiteTheLine) {
  try {
    parse_scenario(std::string(kHeader) + "10 crash_process gsd:1\n12 explode gsd:1\n");
    FAIL() << "accepted an unknown verb";
  } catch (const ScenarioError& e) {
    EXPECT_EQ(e.line(), 8u);
    EXPECT_NE(std::string(e.what()).find("line 8"), std::string::npos);
  }
}

TEST(Scenario, RejectsIntervalNotBelowTimeout) {
  EXPECT_THROW(parse_scenario("[config]\nheartbeat_interval = 1\nheartbeat_timeout = 1\n"), ScenarioError);
  EXPECT_THROW(parse_scenario("[topology]\npartitions = 0\n"), ScenarioError);
  EXPECT_THROW(parse_scenario(std::string(kHeader) + "5 crash_process nobody:1\n"), ScenarioError);
  EXPECT_THROW(parse_scenario(std::string(kHeader) + "-1 crash_process gsd:1\n"), ScenarioError);
}

TEST(Generator, DeterministicAndParsable) {
  GenOptions o;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    auto a = generate_scenario(o, seed);
    EXPECT_EQ(a, generate_scenario(o, seed));
    EXPECT_NO_THROW(parse_scenario(a)) << a;
  }
}

// --- kernel -------------------------------------------------------------------

struct Log {
  std::vector<std::uint64_t> got;
};

class Receiver : public Actor {
 public:
  explicit Receiver(Log& log) : log_(log) {}
  void on_message(Context&, Pid, const wire::Message& m) override {
    if (auto* p = std::get_if<wire::Probe>(&m)) log_.got.push_back(p->nonce);
  }

 private:
  Log& log_;
};

class Burst : public Actor {
 public:
  Burst(Pid to, int n) : to_(to), n_(n) {}
  void on_start(Context& ctx) override { ctx.timer(SimTime::millis(1), TimerTag{1}); }
  void on_timer(Context& ctx, const TimerTag&) override {
    for (int i = 1; i <= n_; ++i) ctx.send(to_, wire::Probe{static_cast<std::uint64_t>(i)});
  }
  void on_message(Context&, Pid, const wire::Message&) override {}

 private:
  Pid to_;
  int n_;
};

KernelConfig jittery(std::uint64_t seed) {
  KernelConfig c;
  c.latency_min = SimTime::millis(1);
  c.latency_max = SimTime::millis(50);
  c.seed = seed;
  c.quiet_window = SimTime::seconds(1);
  return c;
}

struct Pair {
  Kernel k;
  Log log;
  HostId a, b;
  Pid rx, tx;
  explicit Pair(KernelConfig c, int n = 200) : k(c) {
    a = k.add_host("a");
    b = k.add_host("b");
    rx = k.spawn("rx", b, [this] { return std::make_unique<Receiver>(log); });
    tx = k.spawn("tx", a, [this, n] { return std::make_unique<Burst>(rx, n); });
  }
};

TEST(Kernel, FifoPerChannelUnderJitter) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Pair p(jittery(seed));
    auto r = p.k.run();
    EXPECT_TRUE(r.quiescent);
    ASSERT_EQ(p.log.got.size(), 200u);
    EXPECT_TRUE(std::is_sorted(p.log.got.begin(), p.log.got.end())) << "seed " << seed;
  }
}

TEST(Kernel, SameSeedSameTrace) {
  auto run = [](std::uint64_t seed) {
    Pair p(jittery(seed), 50);
    p.k.run();
    return p.k.trace().text();
  };
  EXPECT_EQ(run(9), run(9));
  EXPECT_NE(run(9), run(10));
}

TEST(Kernel, HostCrashDropsInFlightMessages) {
  Pair p(jittery(3), 20);
  p.k.at(SimTime::millis(2), [&] { p.k.crash_host(p.b); });
  p.k.run();
  EXPECT_TRUE(p.log.got.empty());
  EXPECT_FALSE(p.k.alive(p.rx));
  EXPECT_NE(p.k.trace().text().find("reason=dead"), std::string::npos);
}

TEST(Kernel, PauseHoldsAndResumeRedelivers) {
  Pair p(jittery(4), 30);
  p.k.at(SimTime{}, [&] { p.k.pause(p.rx); });
  p.k.at(SimTime::seconds(5), [&] { p.k.resume(p.rx); });
  auto r = p.k.run();
  EXPECT_TRUE(r.quiescent);
  ASSERT_EQ(p.log.got.size(), 30u);
  EXPECT_TRUE(std::is_sorted(p.log.got.begin(), p.log.got.end()));
}

TEST(Kernel, CrashWhilePausedDiscardsHeld) {
  Pair p(jittery(5), 30);
  p.k.at(SimTime{}, [&] { p.k.pause(p.rx); });
  p.k.at(SimTime::seconds(1), [&] { p.k.crash_process(p.rx); });
  p.k.at(SimTime::seconds(2), [&] { p.k.restart(p.rx); });
  auto r = p.k.run();
  EXPECT_TRUE(r.quiescent);
  EXPECT_TRUE(p.log.got.empty());
  EXPECT_EQ(p.k.incarnation(p.rx), 2u);
}

TEST(Kernel, RestartFailureFlag) {
  Pair p(jittery(6), 1);
  p.k.set_restart_failure(p.rx, true);
  p.k.crash_process(p.rx);
  EXPECT_FALSE(p.k.restart(p.rx));
  p.k.set_restart_failure(p.rx, false);
  EXPECT_TRUE(p.k.restart(p.rx));
}

TEST(Kernel, DurableCellSurvivesProcessCrashNotNodeLoss) {
  Pair p(jittery(7), 1);
  p.k.cell(p.rx)["wal"] = "x";
  p.k.crash_process(p.rx);
  p.k.restart(p.rx);
  EXPECT_EQ(p.k.cell(p.rx)["wal"], "x");
  p.k.crash_host(p.b);
  p.k.revive_host(p.b);
  p.k.restart(p.rx);
  EXPECT_EQ(p.k.cell(p.rx).count("wal"), 0u);
}

}  // namespace
}  // namespace vcm::sim
