/*
 * Copyright 2026 The secagg-sim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Command-line front end: run sweeps, summarize results, export latency
// matrices and run the exactness self-test.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <string>

#include "secagg_sim/experiment.hpp"
#include "secagg_sim/network.hpp"
#include "secagg_sim/protocols.hpp"

namespace {

using namespace secagg_sim;

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

int RunCommand(const std::string& config_path, const std::string& out_path) {
  if (!std::filesystem::exists(config_path)) {
    std::cerr << "error: config file '" << config_path << "' not found\n";
    return kUsage;
  }
  ExperimentConfig config;
  try {
    config = LoadExperimentConfig(config_path);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  const std::string path = out_path.empty() ? config.output : out_path;
  if (path.empty()) {
    std::cerr << "error: no output path (use --out or 'output' in the config)\n";
    return kUsage;
  }
  std::ofstream out(path);
  if (!out) {
    std::cerr << "error: cannot write '" << path << "'\n";
    return kFailure;
  }
  std::size_t failed = 0;
  try {
    RunExperiments(config, &out, [&](const ExperimentRecord& r) {
      if (r.status != "success") ++failed;
      std::cerr << r.protocol << " n=" << r.n_clients << " l=" << r.dimension
                << " run=" << r.run_id << " " << r.status << " " << r.total_time_s
                << "s\n";
    });
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  if (failed) std::cerr << failed << " run(s) did not succeed\n";
  return kOk;
}

int SummarizeCommand(const std::string& in_path) {
  std::ifstream in(in_path);
  if (!in) {
    std::cerr << "error: cannot open '" << in_path << "'\n";
    return kUsage;
  }
  try {
    WriteSummary(std::cout, Summarize(ReadRecords(in)));
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kOk;
}

int LatencyMatrixCommand(const std::string& dataset, std::uint32_t n, std::uint64_t seed,
                         const std::string& out_path) {
  try {
    const auto samples = LoadEndpointSamples(dataset);
    SeededRng rng(seed);
    const auto matrix = LatencyMatrix::Empirical(samples, n, rng, DefaultServerEndpoint());
    std::ofstream out(out_path);
    if (!out) {
      std::cerr << "error: cannot write '" << out_path << "'\n";
      return kFailure;
    }
    matrix.ExportCsv(out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::kParseError || e.code() == ErrorCode::kEmptyDataset
               ? kFailure
               : kUsage;
  }
  return kOk;
}

// Every protocol must reproduce the plaintext sum exactly with no dropouts.
int SelftestCommand(std::uint32_t trials) {
  int bad = 0;
  for (auto id : kProtocolIds) {
    for (std::uint32_t trial = 0; trial < trials; ++trial) {
      ProtocolConfig c;
      c.n_clients = 16;
      c.dimension = 64;
      c.seed = SeedHasher(0xfeed).Mix(id).Mix(trial).value();
      c.graph_k = 6;
      c.s_len = 32;
      c.pack_k = 4;
      const auto inputs = GenerateInputs(c.field, c.n_clients, c.dimension, c.seed);
      FieldVector expected(c.dimension);
      for (const auto& x : inputs) AddInPlace(c.field, expected, x);
      auto setup = MakeProtocol(id, c, inputs);
      RunOptions options;
      options.seed = c.seed;
      const auto run = RunProtocol(setup, LatencyMatrix::Constant(c.n_clients, 0), options);
      if (run.sim.status != SimulationStatus::kSucceeded || !run.sim.output ||
          *run.sim.output != expected) {
        std::cout << "FAIL " << id << " trial " << trial << ": "
                  << StatusName(run.sim.status) << " " << run.sim.reason << "\n";
        ++bad;
      }
    }
    std::cout << (bad ? "checked " : "ok ") << id << "\n";
  }
  std::cout << (bad ? "selftest FAILED\n" : "selftest passed\n");
  return bad ? kFailure : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete-event simulator for secure aggregation protocols"};
  app.require_subcommand(1);

  std::string config_path, out_path;
  auto* run = app.add_subcommand("run", "Run a configured parameter sweep");
  run->add_option("--config", config_path, "YAML sweep description")->required();
  run->add_option("--out", out_path, "Results CSV (overrides 'output')");

  std::string in_path;
  auto* summarize = app.add_subcommand("summarize", "Per-cell mean and standard error");
  summarize->add_option("--in", in_path, "Results CSV")->required();

  std::string dataset, matrix_out;
  std::uint32_t n = 0;
  std::uint64_t seed = 0;
  auto* matrix = app.add_subcommand("latency-matrix", "Sample and export a latency matrix");
  matrix->add_option("--dataset", dataset, "CSV with lat,lon,latency_ms")->required();
  matrix->add_option("--n", n, "Number of clients")->required()->check(CLI::PositiveNumber);
  matrix->add_option("--seed", seed, "Sampling seed")->required();
  matrix->add_option("--out", matrix_out, "Output CSV (nanoseconds)")->required();

  std::uint32_t trials = 5;
  auto* selftest = app.add_subcommand("selftest", "Exactness check for every protocol");
  selftest->add_option("--trials", trials, "Trials per protocol");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  if (*run) return RunCommand(config_path, out_path);
  if (*summarize) return SummarizeCommand(in_path);
  if (*matrix) return LatencyMatrixCommand(dataset, n, seed, matrix_out);
  if (*selftest) return SelftestCommand(trials);
  return kUsage;
}
