// Copyright 2026 The fpca Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end. Exit status: 0 when every enabled assertion
// passes, 1 when one fails, 2 on bad input.

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fpca/harness.h"
#include "fpca/lattice.h"
#include "fpca/network.h"
#include "fpca/serialize.h"

namespace {

using namespace fpca;

void Emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    WriteFile(path, text);
  }
}

struct Overrides {
  std::string report;
  std::string trace_csv;
  std::string samples;
  std::optional<double> eps_prime;
  std::optional<int64_t> max_candidates;
  std::optional<double> subsample;
  std::optional<uint64_t> seed;
  std::optional<int> trials;
  bool paper_strict = false;
};

void AddOverrides(CLI::App* cmd, Overrides* o) {
  cmd->add_option("--out", o->report, "Report path (JSON)");
  cmd->add_option("--trace-csv", o->trace_csv, "Per-iteration trace CSV path");
  cmd->add_option("--emit-samples", o->samples, "Write the first oracle samples as CSV");
  cmd->add_option("--eps-prime", o->eps_prime, "Net granularity for loop and final search");
  cmd->add_option("--budget-max-candidates", o->max_candidates, "Candidate cap per list");
  cmd->add_option("--budget-subsample", o->subsample, "Bernoulli subsampling rate in (0, 1]");
  cmd->add_option("--seed", o->seed, "Learner seed");
  cmd->add_option("--trials", o->trials, "Number of seeded trials");
  cmd->add_flag("--paper-strict", o->paper_strict, "Use the unit-constant formulas");
}

ExperimentSpec LoadSpec(const std::string& path, const Overrides& o) {
  ExperimentSpec spec = ExperimentSpecFromJson(ParseJson(ReadFile(path)));
  if (!o.report.empty()) spec.report_path = o.report;
  if (!o.trace_csv.empty()) spec.trace_csv_path = o.trace_csv;
  if (!o.samples.empty()) spec.samples_csv_path = o.samples;
  LearnConfig& c = spec.config;
  if (o.eps_prime) c.eps_prime_loop = c.eps_prime_final = *o.eps_prime;
  if (o.max_candidates) c.budget.max_candidates = c.final_budget.max_candidates = *o.max_candidates;
  if (o.subsample) c.budget.subsample_rate = c.final_budget.subsample_rate = *o.subsample;
  if (o.seed) c.seed = *o.seed;
  if (o.trials) spec.trials = *o.trials;
  if (o.paper_strict) {
    c.mode = Mode::kPaperStrict;
    c.tau_mode = TauMode::kFormula;
    c.budget.paper_strict = c.final_budget.paper_strict = true;
  }
  c.Validate();
  return spec;
}

int Finish(const Report& r) {
  WriteOutputs(r);
  std::cout << ReportSummary(ReportToJson(r));
  return r.passed ? 0 : 1;
}

std::vector<double> ParseTable(const std::string& text) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    size_t used = 0;
    double v = std::stod(item, &used);
    if (used != item.size()) throw InvalidArgument("bad table entry '" + item + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Threshold-filtered PCA learner and verification harness"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides overrides;
  auto* learn = app.add_subcommand("learn", "Run an experiment spec end to end");
  learn->add_option("--config", config_path, "Experiment spec (JSON)")->required();
  AddOverrides(learn, &overrides);

  std::string verify_config, suite = "toolbox";
  int instances = 100;
  uint64_t verify_seed = 0;
  auto* verify = app.add_subcommand("verify", "Run verification suites");
  verify->add_option("--config", verify_config, "Spec whose enabled suites run without learning");
  verify->add_option("--suite", suite, "Built-in suite when no spec is given")
      ->check(CLI::IsMember({"toolbox"}));
  verify->add_option("--instances", instances, "Random instances per check");
  verify->add_option("--seed", verify_seed, "Seed");
  std::string verify_out;
  verify->add_option("--out", verify_out, "Report path (JSON)");

  InstanceRecipe recipe;
  std::string arch_text, instance_out;
  auto* gen = app.add_subcommand("gen-instance", "Write a target network as JSON");
  gen->add_option("--kind", recipe.kind, "planted, abs or spike")
      ->check(CLI::IsMember({"planted", "abs", "spike"}));
  gen->add_option("--d", recipe.d, "Input dimension");
  gen->add_option("--arch", arch_text, "Hidden widths, comma separated");
  gen->add_option("--B", recipe.B, "Per-layer operator norm");
  gen->add_option("--seed", recipe.seed, "Seed");
  gen->add_option("--Lambda", recipe.Lambda, "Spike slope");
  gen->add_option("--mixed-signs", recipe.mixed_signs, "Force output weights of both signs");
  gen->add_option("--out", instance_out, "Output path (default stdout)");

  std::string table_text, boolean_out;
  auto* boolean = app.add_subcommand("compile-boolean", "Exact network for a truth table");
  boolean->add_option("--table", table_text,
                      "Comma separated values; entry b is the value where x_i = -1 iff bit i of b")
      ->required();
  boolean->add_option("--out", boolean_out, "Output path (default stdout)");

  std::string network_path, lattice_out;
  bool compact = false;
  auto* to_lattice = app.add_subcommand("to-lattice", "Lattice polynomial of a network");
  to_lattice->add_option("--network", network_path, "Network JSON")->required();
  to_lattice->add_flag("--compact", compact, "Merge duplicate leaves and absorbed clauses");
  to_lattice->add_option("--out", lattice_out, "Output path (default stdout)");

  std::string report_path;
  auto* summarize = app.add_subcommand("report-summarize", "Print a report as text");
  summarize->add_option("report", report_path, "Report JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (learn->parsed()) return Finish(RunExperiment(LoadSpec(config_path, overrides)));
    if (verify->parsed()) {
      if (!verify_config.empty()) {
        Overrides o;
        o.report = verify_out;
        ExperimentSpec spec = LoadSpec(verify_config, o);
        spec.learn = false;
        return Finish(RunExperiment(spec));
      }
      SuiteReport s = VerifyToolbox(instances, verify_seed);
      Json j = SuiteToJson(s);
      if (!verify_out.empty()) WriteFile(verify_out, j.dump(2) + "\n");
      for (const Check& c : s.checks) {
        std::cout << c.name << ": " << (c.passed ? "ok" : "FAIL") << " " << c.measured.dump()
                  << "\n";
      }
      return s.passed() ? 0 : 1;
    }
    if (gen->parsed()) {
      if (!arch_text.empty()) {
        recipe.arch.clear();
        for (double w : ParseTable(arch_text)) recipe.arch.push_back(static_cast<int>(w));
      }
      Emit(instance_out, NetworkToText(MakeInstance(recipe)));
      return 0;
    }
    if (boolean->parsed()) {
      Emit(boolean_out, NetworkToText(CompileBoolean(ParseTable(table_text))));
      return 0;
    }
    if (to_lattice->parsed()) {
      LatticePolynomial g = FromNetwork(NetworkFromText(ReadFile(network_path)));
      Emit(lattice_out, LatticeToText(compact ? Compact(g) : g));
      return 0;
    }
    if (summarize->parsed()) {
      std::cout << ReportSummary(ParseJson(ReadFile(report_path)));
      return 0;
    }
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
