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

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "vcm/check/check.hpp"
#include "vcm/cluster/runner.hpp"
#include "vcm/sim/scenario.hpp"

namespace {

int cmd_run(const std::string& path, std::optional<std::uint64_t> seed, const std::string& trace_out) {
  vcm::sim::Scenario sc;
  try {
    sc = vcm::sim::load_scenario(path);
  } catch (const std::exception& e) {
    std::cerr << path << ": " << e.what() << "\n";
    return 2;
  }
  auto out = vcm::cluster::run_scenario(sc, seed);
  if (trace_out.empty() || trace_out == "-") {
    std::cout << out.trace;
  } else {
    std::ofstream f(trace_out, std::ios::binary);
    if (!(f << out.trace)) {
      std::cerr << "cannot write " << trace_out << "\n";
      return 3;
    }
  }
  if (!out.error.empty()) std::cerr << "run error: " << out.error << "\n";
  std::cerr << "status=" << (out.quiescent ? "quiescent" : "horizon") << " end=" << out.end.str()
            << " events=" << out.events << "\n";
  return out.quiescent ? 0 : 1;
}

vcm::sim::ParsedTrace load(const std::string& path) {
  auto t = vcm::sim::read_trace_file(path);
  if (!t.error.empty()) throw std::runtime_error(t.error);
  return t;
}

int cmd_check(const std::string& path, const std::vector<std::string>& props) {
  vcm::sim::ParsedTrace trace;
  try {
    trace = load(path);
  } catch (const std::exception& e) {
    std::cerr << path << ": " << e.what() << "\n";
    return 2;
  }
  vcm::check::CheckReport rep;
  try {
    rep = vcm::check::check_trace(trace, props);
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  std::cout << vcm::check::format_report(rep);
  if (!rep.error.empty()) {
    std::cerr << path << ": " << rep.error << "\n";
    return 2;
  }
  return rep.passed() ? 0 : 1;
}

int cmd_report(const std::string& path) {
  vcm::sim::ParsedTrace trace;
  try {
    trace = load(path);
  } catch (const std::exception& e) {
    std::cerr << path << ": " << e.what() << "\n";
    return 2;
  }
  auto model = vcm::check::TraceModel::build(trace);
  std::cout << vcm::check::format_metrics(vcm::check::compute_metrics(model));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vcm: group membership and cluster view management in a simulated virtualized cluster"};
  app.require_subcommand(1);

  std::string scenario, trace_out, trace_in;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> props{"all"};

  auto* run = app.add_subcommand("run", "Simulate a scenario and write its trace");
  run->add_option("--scenario", scenario, "Scenario file")->required();
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--trace-out", trace_out, "Trace destination (default stdout)");

  auto* check = app.add_subcommand("check", "Evaluate invariants over a trace");
  check->add_option("--trace", trace_in, "Trace file")->required();
  check->add_option("--props", props, "all or a list of: " + [] {
    std::string s;
    for (const auto& n : vcm::check::property_names()) s += (s.empty() ? "" : ", ") + n;
    return s;
  }())->delimiter(',');

  auto* report = app.add_subcommand("report", "Summarize latencies and message counts of a trace");
  report->add_option("--trace", trace_in, "Trace file")->required();

  CLI11_PARSE(app, argc, argv);
  if (*run) return cmd_run(scenario, seed, trace_out);
  if (*check) return cmd_check(trace_in, props);
  return cmd_report(trace_in);
}
