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

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Tolerances are fixed here, not tuned per run.

#include <sys/resource.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "lagrange_oracle.hpp"
#include "protocol_fixtures.hpp"
#include "secagg_sim/experiment.hpp"
#include "secagg_sim/protocols.hpp"
#include "test_agents.hpp"

namespace secagg_sim {
namespace {

using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = true;
  std::ostringstream detail;
  std::string failures;

  void Check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      failures += (failures.empty() ? "" : "; ") + what;
    }
  }
};

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

// Least-squares slope of log(y) against log(x).
double LogLogSlope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

ProtocolConfig PaperConfig(std::uint32_t n, std::uint64_t l, std::uint64_t seed) {
  ProtocolConfig c = testing::SmallConfig(n, l, seed);
  c.s_len = 710;
  c.pack_k = 16;
  c.graph_k = 50;
  return c;
}

ProtocolRun RunOnce(std::string_view protocol, const ProtocolConfig& c,
                    const std::vector<FieldVector>& inputs, const DropoutPlan* plan,
                    bool trace = false, ProtocolSetup* keep = nullptr) {
  ProtocolSetup local = MakeProtocol(protocol, c, inputs);
  ProtocolSetup& setup = keep ? *keep : local;
  if (keep) setup = std::move(local);
  RunOptions options;
  options.seed = c.seed;
  options.dropouts = plan;
  options.record_trace = trace;
  return RunProtocol(setup, LatencyMatrix::Constant(c.n_clients, 0), options);
}

Verdict Ac1Exactness() {
  Verdict v;
  const auto t0 = Clock::now();
  for (auto id : kProtocolIds) {
    int bad = 0;
    for (std::uint64_t trial = 0; trial < 100; ++trial) {
      const ProtocolConfig c = PaperConfig(16, 64, SeedHasher(1).Mix(id).Mix(trial).value());
      const auto inputs = GenerateInputs(c.field, 16, 64, c.seed);
      const auto run = RunOnce(id, c, inputs, nullptr);
      if (run.sim.status != SimulationStatus::kSucceeded ||
          *run.sim.output != testing::SurvivorSum(c.field, inputs, nullptr, 0)) {
        ++bad;
      }
    }
    v.Check(bad == 0, std::string(id) + ": " + std::to_string(bad) + "/100 wrong");
  }
  const double secs = Seconds(t0);
  v.Check(secs < 120, "runtime " + std::to_string(secs) + "s");
  v.detail << "600 runs in " << secs << "s";
  return v;
}

Verdict Ac2Sharing() {
  Verdict v;
  const auto t0 = Clock::now();
  Field f;
  SeededRng rng(2);
  int cases = 0, bad = 0, missed_errors = 0;
  for (std::uint32_t n = 2; n <= 12; ++n) {
    for (std::uint32_t k = 1; k <= 4; ++k) {
      for (std::uint32_t t = 1; t + k <= n; ++t) {
        for (int rep = 0; rep < 3; ++rep) {
          ShareParams p;
          p.n = n;
          p.t = t;
          p.pack_k = k;
          const FieldVector a = RandomVector(f, 11, rng);
          const FieldVector b = RandomVector(f, 11, rng);
          auto sa = Share(f, a, p, rng);
          const auto sb = Share(f, b, p, rng);
          std::vector<ShareArray> summed;
          for (std::uint32_t i = 0; i < n; ++i) {
            const std::vector<ShareArray> pair = {sa[i], sb[i]};
            summed.push_back(SumShares(f, pair));
          }
          rng.Shuffle(sa.begin(), sa.end());
          bad += Reconstruct(f, sa) != a || testing::OracleReconstruct(f, sa) != a;
          bad += Reconstruct(f, summed) != Add(f, a, b) ||
                 testing::OracleReconstruct(f, summed) != Add(f, a, b);
          sa.resize(t + k - 1);
          try {
            Reconstruct(f, sa);
            ++missed_errors;
          } catch (const Error& e) {
            missed_errors += e.code() != ErrorCode::kThresholdNotMet;
          }
          ++cases;
        }
      }
    }
  }
  const double secs = Seconds(t0);
  v.Check(bad == 0, std::to_string(bad) + " mismatches");
  v.Check(missed_errors == 0, std::to_string(missed_errors) + " below-threshold reconstructions");
  v.Check(secs < 60, "runtime");
  v.detail << cases << " grid cases in " << secs << "s";
  return v;
}

Verdict Ac3Dropouts() {
  Verdict v;
  const auto t0 = Clock::now();
  int recovered_keys = 0, recovered_seeds = 0;
  for (std::string_view id : {"bonawitz", "bell"}) {
    int bad = 0;
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
      ProtocolConfig c = PaperConfig(64, 100, SeedHasher(3).Mix(id).Mix(trial).value());
      c.delta = 0.05;
      const auto inputs = GenerateInputs(c.field, 64, 100, c.seed);
      const auto plan = DropoutPlan::Random(64, 0.05, 4, c.seed ^ 0xd);
      ProtocolSetup setup;
      const auto run = RunOnce(id, c, inputs, &plan, false, &setup);
      if (run.sim.status != SimulationStatus::kSucceeded ||
          *run.sim.output != testing::SurvivorSum(c.field, inputs, &plan, 3)) {
        ++bad;
        continue;
      }
      const auto& server = dynamic_cast<const MaskingServer&>(*setup.server);
      for (const auto& [cid, seed] : server.recovered_seeds()) {
        const auto& client = dynamic_cast<const MaskingClient&>(*setup.clients[cid.index - 1]);
        bad += seed.bytes != client.personal_seed().bytes;
        ++recovered_seeds;
      }
      for (const auto& [cid, key] : server.recovered_mask_keys()) {
        const auto& client = dynamic_cast<const MaskingClient&>(*setup.clients[cid.index - 1]);
        bad += key != client.mask_private_key();
        ++recovered_keys;
      }
    }
    v.Check(bad == 0, std::string(id) + ": " + std::to_string(bad) + " errors");
  }
  const double secs = Seconds(t0);
  v.Check(recovered_keys > 0, "no key recovery exercised");
  v.Check(secs < 300, "runtime");
  v.detail << recovered_seeds << " seed and " << recovered_keys << " mask-key recoveries checked in "
           << secs << "s";
  return v;
}

Verdict Ac4Degeneracy() {
  Verdict v;
  int compared = 0;
  for (std::uint32_t n : {8u, 16u}) {
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
      ProtocolConfig c = PaperConfig(n, 32, SeedHasher(4).Mix(n).Mix(trial).value());
      c.graph_k = n - 1;
      const auto inputs = GenerateInputs(c.field, n, 32, c.seed);
      const auto bell = RunOnce("bell", c, inputs, nullptr);
      const auto bon = RunOnce("bonawitz", c, inputs, nullptr);
      v.Check(bell.sim.status == SimulationStatus::kSucceeded &&
                  bon.sim.status == SimulationStatus::kSucceeded &&
                  *bell.sim.output == *bon.sim.output,
              "n=" + std::to_string(n) + " trial " + std::to_string(trial));
      ++compared;
    }
  }
  v.detail << compared << " output pairs bit-identical";
  return v;
}

SimulationResult RunStub(std::uint32_t rounds, Nanoseconds latency, std::uint32_t clients,
                         std::vector<Nanoseconds> spins = {}) {
  testing::RoundTripServer server(clients, rounds);
  std::vector<std::unique_ptr<Agent>> agents_owned;
  std::vector<Agent*> agents = {&server};
  for (std::uint32_t i = 0; i < clients; ++i) {
    agents_owned.push_back(
        std::make_unique<testing::EchoClient>(spins.empty() ? 0 : spins[i % spins.size()]));
    agents.push_back(agents_owned.back().get());
  }
  return RunSimulation(agents, LatencyMatrix::Constant(clients, latency), {});
}

Verdict Ac5LatencyLaw() {
  Verdict v;
  const auto slow = RunStub(4, 5 * kSecond, 16);
  const auto fast = RunStub(4, 0, 16);
  const double added = static_cast<double>(slow.total_time - fast.total_time) / 1e9;
  v.Check(slow.status == SimulationStatus::kSucceeded, "stub did not finish");
  v.Check(std::abs(added - 40.0) <= 0.05 * 40.0, "added time off");
  v.detail << "added " << added << " s (target 40 s +- 5%)";
  return v;
}

Verdict Ac6Parallelism() {
  Verdict v;
  const auto r = RunStub(1, 0, 4, {50 * kMillisecond, 100 * kMillisecond});
  const double ms = static_cast<double>(r.total_time) / 1e6;
  v.Check(r.status == SimulationStatus::kSucceeded, "stub did not finish");
  v.Check(std::abs(ms - 100.0) <= 10.0, "round duration off");
  v.detail << "round took " << ms << " ms (max 100, sum 300)";
  return v;
}

double AvgClientBytes(std::string_view id, std::uint32_t n, std::uint64_t l) {
  const ProtocolConfig c = PaperConfig(n, l, SeedHasher(7).Mix(id).Mix(n).Mix(l).value());
  const auto inputs = GenerateInputs(c.field, n, l, c.seed);
  const auto run = RunOnce(id, c, inputs, nullptr);
  if (run.sim.status != SimulationStatus::kSucceeded) return std::nan("");
  return MakeRecord(std::string(id), n, l, 0, run).avg_client_bytes_sent;
}

Verdict Ac7Asymptotics() {
  Verdict v;
  const auto t0 = Clock::now();
  std::vector<double> ns = {64, 256, 1024}, ss, bell;
  for (double n : ns) {
    ss.push_back(AvgClientBytes("secret_sharing", static_cast<std::uint32_t>(n), 100));
    bell.push_back(AvgClientBytes("bell", static_cast<std::uint32_t>(n), 100));
  }
  const double ss_slope = LogLogSlope(ns, ss);
  const double bell_slope = LogLogSlope({ns[1], ns[2]}, {bell[1], bell[2]});
  v.Check(std::abs(ss_slope - 1.0) <= 0.15, "secret_sharing n-slope");
  v.Check(std::abs(bell_slope) <= 0.1, "bell n-slope");
  v.detail << "n-slope secret_sharing=" << ss_slope << " bell(256..1024)=" << bell_slope
           << "; l-slope";
  std::vector<double> ls = {1e2, 1e3, 1e4};
  for (auto id : kProtocolIds) {
    std::vector<double> bytes;
    for (double l : ls) bytes.push_back(AvgClientBytes(id, 64, static_cast<std::uint64_t>(l)));
    const double slope = LogLogSlope(ls, bytes);
    v.Check(std::abs(slope - 1.0) <= 0.15, std::string(id) + " l-slope");
    v.detail << " " << id << "=" << slope;
  }
  const double secs = Seconds(t0);
  v.Check(secs < 1800, "runtime");
  v.detail << " (" << secs << "s)";
  return v;
}

Verdict Ac8Scale() {
  Verdict v;
  const auto t0 = Clock::now();
  ProtocolConfig c = PaperConfig(10000, 100, 8);
  c.delta = 0.05;
  const auto inputs = GenerateInputs(c.field, 10000, 100, c.seed);
  const auto plan = DropoutPlan::Random(10000, 0.05, 4, 88);
  const auto run = RunOnce("bell", c, inputs, &plan);
  rusage usage{};
  getrusage(RUSAGE_SELF, &usage);
  v.Check(run.sim.status == SimulationStatus::kSucceeded, "status " +
                                                              std::string(StatusName(run.sim.status)));
  v.Check(run.sim.output && *run.sim.output == testing::SurvivorSum(c.field, inputs, &plan, 3),
          "wrong sum");
  v.detail << "n=10000 simulated " << static_cast<double>(run.sim.total_time) / 1e9
           << " s, wall " << Seconds(t0) << " s, peak RSS " << usage.ru_maxrss / 1024
           << " MiB";
  return v;
}

Verdict Ac9Packing() {
  Verdict v;
  double bytes_plain = 0, bytes_packed = 0, server_plain = 0, server_packed = 0;
  const int runs = 5;
  for (int r = 0; r < runs; ++r) {
    const ProtocolConfig c = PaperConfig(64, 1000, SeedHasher(9).Mix(r).value());
    const auto inputs = GenerateInputs(c.field, 64, 1000, c.seed);
    const auto plain = RunOnce("stevens", c, inputs, nullptr, true);
    const auto packed = RunOnce("stevens_packed", c, inputs, nullptr, true);
    v.Check(plain.sim.status == SimulationStatus::kSucceeded &&
                packed.sim.status == SimulationStatus::kSucceeded &&
                *plain.sim.output == *packed.sim.output,
            "outputs differ in run " + std::to_string(r));
    bytes_plain += testing::ServerReceivedPerClient(plain.sim, 2, 64);
    bytes_packed += testing::ServerReceivedPerClient(packed.sim, 2, 64);
    server_plain += static_cast<double>(plain.sim.accounts.compute[0]);
    server_packed += static_cast<double>(packed.sim.accounts.compute[0]);
  }
  v.Check(bytes_packed < bytes_plain, "share bytes");
  v.Check(server_packed < server_plain, "server compute");
  v.detail << "round-2 bytes/client " << bytes_plain / runs << " -> " << bytes_packed / runs
           << ", server compute " << server_plain / runs / 1e6 << " ms -> "
           << server_packed / runs / 1e6 << " ms";
  return v;
}

std::string NonTimingColumns(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  const std::string header(kRecordHeader);
  while (std::getline(in, line)) {
    std::istringstream cells(line);
    std::string cell;
    int i = 0;
    while (std::getline(cells, cell, ',')) {
      // Columns 5..7 are total_time_s, avg_client_compute_s, server_compute_s.
      if (i < 5 || i > 7) out += cell + ",";
      ++i;
    }
    out += "\n";
  }
  return out;
}

Verdict Ac10Determinism() {
  Verdict v;
  ExperimentConfig c;
  c.protocols.assign(kProtocolIds.begin(), kProtocolIds.end());
  c.clients = {8, 20};
  c.dimensions = {10, 50};
  c.runs = 2;
  c.delta = 0.05;
  c.dropout_rate = 0.1;
  c.s_len = 64;
  c.graph_k = 6;
  c.seed = 10;
  c.latency.model = LatencySpec::Model::kEmpirical;
  c.latency.dataset = SECAGG_SOURCE_DIR "/data/speedtest_sample.csv";
  std::ostringstream a, b;
  const auto records = RunExperiments(c, &a);
  RunExperiments(c, &b);
  std::size_t successes = 0;
  for (const auto& r : records) successes += r.status == "success";
  v.Check(NonTimingColumns(a.str()) == NonTimingColumns(b.str()), "non-timing columns differ");
  v.detail << records.size() << " rows (" << successes << " success) identical outside timing";
  return v;
}

}  // namespace
}  // namespace secagg_sim

int main() {
  using namespace secagg_sim;
  struct Criterion {
    const char* name;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria = {
      {"AC1 exactness", Ac1Exactness},         {"AC2 sharing homomorphism", Ac2Sharing},
      {"AC3 dropout recovery", Ac3Dropouts},   {"AC4 bell(k=n-1) == bonawitz", Ac4Degeneracy},
      {"AC5 latency law", Ac5LatencyLaw},      {"AC6 parallelism law", Ac6Parallelism},
      {"AC7 communication slopes", Ac7Asymptotics}, {"AC8 scale n=10000", Ac8Scale},
      {"AC9 packing benefit", Ac9Packing},     {"AC10 determinism", Ac10Determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << "exception: " << e.what();
    }
    failed += !v.pass;
    std::cout << (v.pass ? "PASS " : "FAIL ") << c.name << ": " << v.detail.str();
    if (!v.pass) std::cout << " | failed: " << v.failures;
    std::cout << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed ? 1 : 0;
}
