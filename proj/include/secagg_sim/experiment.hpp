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

#pragma once

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "secagg_sim/errors.hpp"
#include "secagg_sim/network.hpp"
#include "secagg_sim/protocols.hpp"
#include "secagg_sim/random.hpp"

namespace secagg_sim {

struct LatencySpec {
  enum class Model { kZero, kConstant, kEmpirical };
  Model model = Model::kZero;
  double constant_ms = 0.0;
  std::string dataset;
  bool noise = true;  // empirical model only
};

struct ExperimentConfig {
  std::vector<std::string> protocols = {"baseline"};
  std::vector<std::uint32_t> clients = {8};
  std::vector<std::uint64_t> dimensions = {100};
  std::uint32_t runs = 5;
  std::uint64_t field_q = Field::kMersenne31;
  double delta = 0.0;
  // Fraction of clients that drop; defaults to delta.
  std::optional<double> dropout_rate;
  LatencySpec latency;
  std::uint32_t s_len = 710;
  std::uint32_t pack_k = 16;
  std::uint32_t graph_k = 50;
  bool random_graph = false;
  std::optional<std::uint32_t> recovery_threshold;
  LweError lwe_error = LweError::kNone;
  std::uint32_t eta = 1;
  double calibration_scale = 1.0;
  std::uint64_t seed = 1;
  std::string output;

  void Validate() const {
    auto bad = [](const std::string& m) { throw Error(ErrorCode::kInvalidParams, m); };
    if (protocols.empty() || clients.empty() || dimensions.empty()) {
      bad("protocols, clients and dimensions must be non-empty");
    }
    for (const auto& p : protocols) {
      if (!IsKnownProtocol(p)) bad("unknown protocol '" + p + "'");
    }
    for (auto n : clients) {
      if (n < 2) bad("client counts must be >= 2");
    }
    for (auto l : dimensions) {
      if (l < 1) bad("dimensions must be >= 1");
    }
    if (runs < 1) bad("runs must be >= 1");
    if (delta < 0.0 || delta >= 1.0) bad("delta must be in [0, 1)");
    if (dropout_rate && (*dropout_rate < 0.0 || *dropout_rate >= 1.0)) {
      bad("dropout_rate must be in [0, 1)");
    }
    if (pack_k < 1 || s_len < 1 || graph_k < 1) bad("s_len, pack_k, graph_k must be >= 1");
    if (latency.model == LatencySpec::Model::kEmpirical && latency.dataset.empty()) {
      bad("empirical latency needs a dataset");
    }
    (void)Field(field_q);
  }
};

namespace experiment_internal {

[[noreturn]] inline void ConfigError(const std::string& source, const YAML::Mark& mark,
                                     const std::string& what) {
  std::ostringstream os;
  os << source << ":" << (mark.line + 1) << ":" << (mark.column + 1) << ": " << what;
  throw Error(ErrorCode::kParseError, os.str());
}

template <typename T>
T As(const std::string& source, const YAML::Node& node, const char* key) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    ConfigError(source, node.Mark(), std::string("bad value for '") + key + "'");
  }
}

template <typename T>
std::vector<T> ScalarOrList(const std::string& source, const YAML::Node& node,
                            const char* key) {
  std::vector<T> out;
  if (node.IsSequence()) {
    for (const auto& item : node) out.push_back(As<T>(source, item, key));
  } else {
    out.push_back(As<T>(source, node, key));
  }
  return out;
}

}  // namespace experiment_internal

// Parses a YAML sweep description. Every field is optional; unknown keys
// are rejected so typos do not silently fall back to defaults.
inline ExperimentConfig ParseExperimentConfig(std::istream& in,
                                              const std::string& source = "<config>") {
  using namespace experiment_internal;
  YAML::Node root;
  try {
    root = YAML::Load(in);
  } catch (const YAML::Exception& e) {
    ConfigError(source, e.mark, e.msg);
  }
  ExperimentConfig c;
  if (root.IsNull()) return c;
  if (!root.IsMap()) ConfigError(source, root.Mark(), "config must be a mapping");

  for (const auto& kv : root) {
    const std::string key = kv.first.as<std::string>();
    const YAML::Node& v = kv.second;
    if (key == "protocol" || key == "protocols") {
      c.protocols = ScalarOrList<std::string>(source, v, "protocols");
      for (const auto& p : c.protocols) {
        if (!IsKnownProtocol(p)) ConfigError(source, v.Mark(), "unknown protocol '" + p + "'");
      }
    } else if (key == "clients") {
      c.clients = ScalarOrList<std::uint32_t>(source, v, "clients");
    } else if (key == "dimensions") {
      c.dimensions = ScalarOrList<std::uint64_t>(source, v, "dimensions");
    } else if (key == "runs") {
      c.runs = As<std::uint32_t>(source, v, "runs");
    } else if (key == "field_q") {
      c.field_q = As<std::uint64_t>(source, v, "field_q");
    } else if (key == "delta") {
      c.delta = As<double>(source, v, "delta");
    } else if (key == "dropout_rate") {
      c.dropout_rate = As<double>(source, v, "dropout_rate");
    } else if (key == "seed") {
      c.seed = As<std::uint64_t>(source, v, "seed");
    } else if (key == "output") {
      c.output = As<std::string>(source, v, "output");
    } else if (key == "calibration_scale") {
      c.calibration_scale = As<double>(source, v, "calibration_scale");
    } else if (key == "latency") {
      if (!v.IsMap()) ConfigError(source, v.Mark(), "'latency' must be a mapping");
      for (const auto& lkv : v) {
        const std::string lkey = lkv.first.as<std::string>();
        const YAML::Node& lv = lkv.second;
        if (lkey == "model") {
          const auto m = As<std::string>(source, lv, "model");
          if (m == "zero") {
            c.latency.model = LatencySpec::Model::kZero;
          } else if (m == "constant") {
            c.latency.model = LatencySpec::Model::kConstant;
          } else if (m == "empirical") {
            c.latency.model = LatencySpec::Model::kEmpirical;
          } else {
            ConfigError(source, lv.Mark(), "unknown latency model '" + m + "'");
          }
        } else if (lkey == "constant_ms") {
          c.latency.constant_ms = As<double>(source, lv, "constant_ms");
        } else if (lkey == "dataset") {
          c.latency.dataset = As<std::string>(source, lv, "dataset");
        } else if (lkey == "noise") {
          c.latency.noise = As<bool>(source, lv, "noise");
        } else {
          ConfigError(source, lkv.first.Mark(), "unknown latency key '" + lkey + "'");
        }
      }
    } else if (key == "params") {
      if (!v.IsMap()) ConfigError(source, v.Mark(), "'params' must be a mapping");
      for (const auto& pkv : v) {
        const std::string pkey = pkv.first.as<std::string>();
        const YAML::Node& pv = pkv.second;
        if (pkey == "s_len") {
          c.s_len = As<std::uint32_t>(source, pv, "s_len");
        } else if (pkey == "pack_k") {
          c.pack_k = As<std::uint32_t>(source, pv, "pack_k");
        } else if (pkey == "graph_k") {
          c.graph_k = As<std::uint32_t>(source, pv, "graph_k");
        } else if (pkey == "random_graph") {
          c.random_graph = As<bool>(source, pv, "random_graph");
        } else if (pkey == "recovery_threshold") {
          if (!pv.IsNull()) c.recovery_threshold = As<std::uint32_t>(source, pv, "recovery_threshold");
        } else if (pkey == "lwe_error") {
          const auto e = As<std::string>(source, pv, "lwe_error");
          if (e == "none") {
            c.lwe_error = LweError::kNone;
          } else if (e == "centered_binomial") {
            c.lwe_error = LweError::kCenteredBinomial;
          } else {
            ConfigError(source, pv.Mark(), "unknown lwe_error '" + e + "'");
          }
        } else if (pkey == "eta") {
          c.eta = As<std::uint32_t>(source, pv, "eta");
        } else {
          ConfigError(source, pkv.first.Mark(), "unknown params key '" + pkey + "'");
        }
      }
    } else {
      ConfigError(source, kv.first.Mark(), "unknown key '" + key + "'");
    }
  }
  try {
    c.Validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kParseError, source + ": " + e.what());
  }
  return c;
}

inline ExperimentConfig LoadExperimentConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kParseError, "cannot open config '" + path + "'");
  return ParseExperimentConfig(in, path);
}

struct ExperimentRecord {
  std::string protocol;
  std::uint32_t n_clients = 0;
  std::uint64_t dimension = 0;
  std::uint32_t run_id = 0;
  std::string status;
  double total_time_s = 0;
  double avg_client_compute_s = 0;
  double server_compute_s = 0;
  double avg_client_bytes_sent = 0;
  double avg_client_bytes_received = 0;
  std::uint64_t server_bytes_sent = 0;
  std::uint64_t server_bytes_received = 0;
  std::uint32_t rounds_completed = 0;
  std::uint32_t dropped_clients = 0;
  // Hex digest of the aggregate, empty when the run failed.
  std::string output_digest;
};

inline constexpr std::string_view kRecordHeader =
    "protocol,n_clients,dimension,run_id,status,total_time_s,avg_client_compute_s,"
    "server_compute_s,avg_client_bytes_sent,avg_client_bytes_received,"
    "server_bytes_sent,server_bytes_received,rounds_completed,dropped_clients,"
    "output_digest";

// Columns that depend on host CPU speed.
inline constexpr std::array<std::string_view, 3> kTimingColumns = {
    "total_time_s", "avg_client_compute_s", "server_compute_s"};

namespace experiment_internal {

inline std::string FormatDouble(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

inline std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::string Digest(const FieldVector& v) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto e : v) {
    for (int i = 0; i < 4; ++i) {
      h ^= (e.value >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace experiment_internal

inline void WriteRecordHeader(std::ostream& out) { out << kRecordHeader << '\n'; }

inline void WriteRecord(std::ostream& out, const ExperimentRecord& r) {
  using experiment_internal::FormatDouble;
  out << r.protocol << ',' << r.n_clients << ',' << r.dimension << ',' << r.run_id << ','
      << r.status << ',' << FormatDouble(r.total_time_s) << ','
      << FormatDouble(r.avg_client_compute_s) << ',' << FormatDouble(r.server_compute_s)
      << ',' << FormatDouble(r.avg_client_bytes_sent) << ','
      << FormatDouble(r.avg_client_bytes_received) << ',' << r.server_bytes_sent << ','
      << r.server_bytes_received << ',' << r.rounds_completed << ','
      << r.dropped_clients << ',' << r.output_digest << '\n';
}

inline std::vector<ExperimentRecord> ReadRecords(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kRecordHeader) {
    throw Error(ErrorCode::kParseError, "results CSV: missing or unexpected header");
  }
  std::vector<ExperimentRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto c = experiment_internal::SplitCsv(line);
    if (c.size() != 15) {
      throw Error(ErrorCode::kParseError,
                  "results CSV line " + std::to_string(line_no) + ": expected 15 columns");
    }
    try {
      ExperimentRecord r;
      r.protocol = c[0];
      r.n_clients = static_cast<std::uint32_t>(std::stoul(c[1]));
      r.dimension = std::stoull(c[2]);
      r.run_id = static_cast<std::uint32_t>(std::stoul(c[3]));
      r.status = c[4];
      r.total_time_s = std::stod(c[5]);
      r.avg_client_compute_s = std::stod(c[6]);
      r.server_compute_s = std::stod(c[7]);
      r.avg_client_bytes_sent = std::stod(c[8]);
      r.avg_client_bytes_received = std::stod(c[9]);
      r.server_bytes_sent = std::stoull(c[10]);
      r.server_bytes_received = std::stoull(c[11]);
      r.rounds_completed = static_cast<std::uint32_t>(std::stoul(c[12]));
      r.dropped_clients = static_cast<std::uint32_t>(std::stoul(c[13]));
      r.output_digest = c[14];
      out.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kParseError,
                  "results CSV line " + std::to_string(line_no) + ": bad number");
    }
  }
  return out;
}

// Builds the record for one finished simulation.
inline ExperimentRecord MakeRecord(const std::string& protocol, std::uint32_t n,
                                   std::uint64_t l, std::uint32_t run_id,
                                   const ProtocolRun& run) {
  const auto& acc = run.sim.accounts;
  ExperimentRecord r;
  r.protocol = protocol;
  r.n_clients = n;
  r.dimension = l;
  r.run_id = run_id;
  // Agent exceptions are reported as protocol failures.
  r.status = run.sim.status == SimulationStatus::kAgentError
                 ? "failed"
                 : std::string(StatusName(run.sim.status));
  r.total_time_s = static_cast<double>(run.sim.total_time) / 1e9;
  r.server_compute_s = acc.compute.empty() ? 0 : static_cast<double>(acc.compute[0]) / 1e9;
  double compute = 0, sent = 0, received = 0;
  for (std::size_t i = 1; i < acc.compute.size(); ++i) {
    compute += static_cast<double>(acc.compute[i]);
    sent += static_cast<double>(acc.bytes_sent[i]);
    received += static_cast<double>(acc.bytes_received[i]);
  }
  const double clients = std::max<double>(1, static_cast<double>(n));
  r.avg_client_compute_s = compute / clients / 1e9;
  r.avg_client_bytes_sent = sent / clients;
  r.avg_client_bytes_received = received / clients;
  if (!acc.bytes_sent.empty()) {
    r.server_bytes_sent = acc.bytes_sent[0];
    r.server_bytes_received = acc.bytes_received[0];
  }
  r.rounds_completed = run.rounds_completed;
  r.dropped_clients = static_cast<std::uint32_t>(run.sim.dropped.size());
  if (run.sim.output) r.output_digest = experiment_internal::Digest(*run.sim.output);
  return r;
}

inline std::uint64_t CellSeed(std::uint64_t master, std::string_view protocol,
                              std::uint32_t n, std::uint64_t l, std::uint32_t run) {
  return SeedHasher(master).Mix(protocol).Mix(n).Mix(l).Mix(run).value();
}

inline ProtocolConfig MakeProtocolConfig(const ExperimentConfig& c, std::uint32_t n,
                                         std::uint64_t l, std::uint64_t seed) {
  ProtocolConfig p;
  p.field = Field(c.field_q);
  p.n_clients = n;
  p.dimension = l;
  p.delta = c.delta;
  p.seed = seed;
  p.s_len = c.s_len;
  p.pack_k = c.pack_k;
  p.lwe_error = c.lwe_error;
  p.eta = c.eta;
  p.a_seed = SeedHasher(seed).Mix("a").value();
  p.graph_k = c.graph_k;
  p.random_graph = c.random_graph;
  p.graph_seed = SeedHasher(seed).Mix("graph").value();
  p.recovery_threshold = c.recovery_threshold;
  return p;
}

// Runs one cell of the sweep. Never throws for protocol-level problems;
// those become a failed row.
inline ExperimentRecord RunCell(const ExperimentConfig& c, const std::string& protocol,
                                std::uint32_t n, std::uint64_t l, std::uint32_t run_id,
                                const std::vector<EndpointSample>* dataset) {
  const std::uint64_t seed = CellSeed(c.seed, protocol, n, l, run_id);
  try {
    const ProtocolConfig pc = MakeProtocolConfig(c, n, l, seed);
    auto setup = MakeProtocol(protocol, pc, GenerateInputs(pc.field, n, l, seed));

    std::optional<LatencyMatrix> latency;
    switch (c.latency.model) {
      case LatencySpec::Model::kZero:
        latency = LatencyMatrix::Constant(n, 0);
        break;
      case LatencySpec::Model::kConstant:
        latency = LatencyMatrix::Constant(
            n, static_cast<Nanoseconds>(std::llround(c.latency.constant_ms * 1e6)));
        break;
      case LatencySpec::Model::kEmpirical: {
        SeededRng rng(SeedHasher(seed).Mix("latency").value());
        latency = LatencyMatrix::Empirical(
            *dataset, n, rng, DefaultServerEndpoint(),
            c.latency.noise ? NoiseModel::Default() : NoiseModel::None());
        break;
      }
    }
    const DropoutPlan plan =
        DropoutPlan::Random(n, c.dropout_rate.value_or(c.delta), setup.client_rounds,
                            SeedHasher(seed).Mix("dropouts").value());
    RunOptions options;
    options.seed = SeedHasher(seed).Mix("kernel").value();
    options.calibration_scale = c.calibration_scale;
    options.dropouts = &plan;
    const ProtocolRun run = RunProtocol(setup, *latency, options);
    return MakeRecord(protocol, n, l, run_id, run);
  } catch (const std::exception&) {
    ExperimentRecord r;
    r.protocol = protocol;
    r.n_clients = n;
    r.dimension = l;
    r.run_id = run_id;
    r.status = "failed";
    return r;
  }
}

// Full Cartesian sweep. When `csv` is given, the header and each row are
// written (and flushed) as soon as they are available.
inline std::vector<ExperimentRecord> RunExperiments(
    const ExperimentConfig& config, std::ostream* csv = nullptr,
    const std::function<void(const ExperimentRecord&)>& on_record = nullptr) {
  config.Validate();
  std::vector<EndpointSample> dataset;
  if (config.latency.model == LatencySpec::Model::kEmpirical) {
    dataset = LoadEndpointSamples(config.latency.dataset);
  }
  if (csv) {
    WriteRecordHeader(*csv);
    csv->flush();
  }
  std::vector<ExperimentRecord> records;
  for (const auto& protocol : config.protocols) {
    for (auto n : config.clients) {
      for (auto l : config.dimensions) {
        for (std::uint32_t run = 0; run < config.runs; ++run) {
          records.push_back(RunCell(config, protocol, n, l, run, &dataset));
          if (csv) {
            WriteRecord(*csv, records.back());
            csv->flush();
          }
          if (on_record) on_record(records.back());
        }
      }
    }
  }
  return records;
}

struct MetricSummary {
  std::optional<double> mean;
  std::optional<double> stderr_;
};

struct CellSummary {
  std::string protocol;
  std::uint32_t n_clients = 0;
  std::uint64_t dimension = 0;
  std::uint32_t runs = 0;
  double failure_rate = 0;
  std::map<std::string, MetricSummary> metrics;
};

inline constexpr std::array<std::string_view, 9> kSummaryMetrics = {
    "total_time_s",          "avg_client_compute_s",      "server_compute_s",
    "avg_client_bytes_sent", "avg_client_bytes_received", "server_bytes_sent",
    "server_bytes_received", "rounds_completed",          "dropped_clients"};

inline double MetricValue(const ExperimentRecord& r, std::string_view name) {
  if (name == "total_time_s") return r.total_time_s;
  if (name == "avg_client_compute_s") return r.avg_client_compute_s;
  if (name == "server_compute_s") return r.server_compute_s;
  if (name == "avg_client_bytes_sent") return r.avg_client_bytes_sent;
  if (name == "avg_client_bytes_received") return r.avg_client_bytes_received;
  if (name == "server_bytes_sent") return static_cast<double>(r.server_bytes_sent);
  if (name == "server_bytes_received") return static_cast<double>(r.server_bytes_received);
  if (name == "rounds_completed") return r.rounds_completed;
  if (name == "dropped_clients") return r.dropped_clients;
  throw Error(ErrorCode::kInvalidParams, "unknown metric " + std::string(name));
}

// Mean and standard error (s / sqrt(n)) of each metric over the successful
// runs of every (protocol, n, l) cell, in first-seen order.
inline std::vector<CellSummary> Summarize(const std::vector<ExperimentRecord>& records) {
  std::vector<CellSummary> cells;
  std::map<std::tuple<std::string, std::uint32_t, std::uint64_t>, std::size_t> index;
  std::vector<std::vector<const ExperimentRecord*>> ok;
  for (const auto& r : records) {
    const auto key = std::make_tuple(r.protocol, r.n_clients, r.dimension);
    auto [it, inserted] = index.emplace(key, cells.size());
    if (inserted) {
      cells.push_back({r.protocol, r.n_clients, r.dimension, 0, 0, {}});
      ok.emplace_back();
    }
    CellSummary& cell = cells[it->second];
    ++cell.runs;
    if (r.status == "success") {
      ok[it->second].push_back(&r);
    } else {
      cell.failure_rate += 1;
    }
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    CellSummary& cell = cells[i];
    cell.failure_rate /= cell.runs;
    for (auto name : kSummaryMetrics) {
      MetricSummary m;
      const auto& rows = ok[i];
      if (!rows.empty()) {
        double sum = 0;
        for (const auto* r : rows) sum += MetricValue(*r, name);
        const double mean = sum / static_cast<double>(rows.size());
        double ss = 0;
        for (const auto* r : rows) ss += std::pow(MetricValue(*r, name) - mean, 2);
        m.mean = mean;
        m.stderr_ = rows.size() > 1
                        ? std::sqrt(ss / static_cast<double>(rows.size() - 1)) /
                              std::sqrt(static_cast<double>(rows.size()))
                        : 0.0;
      }
      cell.metrics.emplace(std::string(name), m);
    }
  }
  return cells;
}

inline void WriteSummary(std::ostream& out, const std::vector<CellSummary>& cells) {
  using experiment_internal::FormatDouble;
  out << "protocol,n_clients,dimension,runs,failure_rate";
  for (auto name : kSummaryMetrics) out << ",mean_" << name << ",stderr_" << name;
  out << '\n';
  for (const auto& c : cells) {
    out << c.protocol << ',' << c.n_clients << ',' << c.dimension << ',' << c.runs << ','
        << FormatDouble(c.failure_rate);
    for (auto name : kSummaryMetrics) {
      const auto& m = c.metrics.at(std::string(name));
      out << ',' << (m.mean ? FormatDouble(*m.mean) : "") << ','
          << (m.stderr_ ? FormatDouble(*m.stderr_) : "");
    }
    out << '\n';
  }
}

}  // namespace secagg_sim
