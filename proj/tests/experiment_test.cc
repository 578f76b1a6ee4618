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

#include "secagg_sim/experiment.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

namespace secagg_sim {
namespace {

ExperimentConfig Parse(const std::string& yaml) {
  std::istringstream in(yaml);
  return ParseExperimentConfig(in, "test.yaml");
}

std::string ParseError(const std::string& yaml) {
  try {
    Parse(yaml);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParseError);
    return e.what();
  }
  ADD_FAILURE() << "no error for:\n" << yaml;
  return "";
}

TEST(ConfigTest, DefaultsAndFullSchema) {
  const auto d = Parse("");
  EXPECT_EQ(d.runs, 5u);
  EXPECT_EQ(d.field_q, (1ULL << 31) - 1);

  const auto c = Parse(R"(
protocols: [bell, stevens_packed]
clients: [8, 16]
dimensions: 100
runs: 2
field_q: 65537
delta: 0.05
dropout_rate: 0.0
seed: 99
output: out.csv
calibration_scale: 2.0
latency:
  model: empirical
  dataset: data.csv
  noise: false
params:
  s_len: 32
  pack_k: 4
  graph_k: 10
  random_graph: true
  recovery_threshold: 3
  lwe_error: centered_binomial
  eta: 2
)");
  EXPECT_EQ(c.protocols, (std::vector<std::string>{"bell", "stevens_packed"}));
  EXPECT_EQ(c.clients, (std::vector<std::uint32_t>{8, 16}));
  EXPECT_EQ(c.dimensions, (std::vector<std::uint64_t>{100}));
  EXPECT_EQ(c.runs, 2u);
  EXPECT_EQ(c.field_q, 65537u);
  EXPECT_DOUBLE_EQ(c.delta, 0.05);
  EXPECT_EQ(c.dropout_rate, 0.0);
  EXPECT_EQ(c.seed, 99u);
  EXPECT_EQ(c.output, "out.csv");
  EXPECT_EQ(c.latency.model, LatencySpec::Model::kEmpirical);
  EXPECT_FALSE(c.latency.noise);
  EXPECT_EQ(c.pack_k, 4u);
  EXPECT_EQ(c.graph_k, 10u);
  EXPECT_TRUE(c.random_graph);
  EXPECT_EQ(c.recovery_threshold, 3u);
  EXPECT_EQ(c.lwe_error, LweError::kCenteredBinomial);
  EXPECT_EQ(c.eta, 2u);
}

TEST(ConfigTest, ErrorsCarryLineNumbers) {
  EXPECT_NE(ParseError("clients: [8]\nruns: lots\n").find("test.yaml:2:"), std::string::npos);
  EXPECT_NE(ParseError("clients: [8]\n\nbogus: 1\n").find("test.yaml:3:"), std::string::npos);
  EXPECT_NE(ParseError("protocol: nope\n").find("unknown protocol"), std::string::npos);
  EXPECT_NE(ParseError("clients: [8\n").find("test.yaml:"), std::string::npos);
  EXPECT_NE(ParseError("latency:\n  model: warp\n").find("test.yaml:2:"), std::string::npos);
  EXPECT_FALSE(ParseError("runs: 0\n").empty());
  EXPECT_FALSE(ParseError("clients: []\n").empty());
  EXPECT_FALSE(ParseError("field_q: 65536\n").empty());
}

ExperimentConfig Tiny(std::vector<std::string> protocols, std::uint32_t runs) {
  ExperimentConfig c;
  c.protocols = std::move(protocols);
  c.clients = {8};
  c.dimensions = {10};
  c.runs = runs;
  c.s_len = 8;
  c.pack_k = 2;
  c.graph_k = 4;
  return c;
}

TEST(RunExperimentsTest, BaselineRows) {
  std::ostringstream csv;
  const auto records = RunExperiments(Tiny({"baseline"}, 2), &csv);
  ASSERT_EQ(records.size(), 2u);
  for (const auto& r : records) {
    EXPECT_EQ(r.status, "success");
    EXPECT_EQ(r.dropped_clients, 0u);
    EXPECT_EQ(r.rounds_completed, 2u);
    EXPECT_GT(r.avg_client_bytes_sent, 40.0);
    EXPECT_EQ(r.output_digest.size(), 16u);
  }
  EXPECT_EQ(records[0].dropped_clients, records[1].dropped_clients);
  std::istringstream in(csv.str());
  const auto parsed = ReadRecords(in);
  ASSERT_EQ(parsed.size(), 2u);
  EXPECT_EQ(parsed[1].output_digest, records[1].output_digest);
}

TEST(RunExperimentsTest, FailuresBecomeRows) {
  ExperimentConfig c = Tiny({"secret_sharing", "baseline"}, 1);
  c.delta = 0.0;
  c.dropout_rate = 0.25;  // more drops than the gate tolerates
  const auto records = RunExperiments(c);
  ASSERT_EQ(records.size(), 2u);
  for (const auto& r : records) EXPECT_EQ(r.status, "failed");
}

std::string NonTimingColumns(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) {
    std::istringstream cells(line);
    std::string cell;
    int i = 0;
    while (std::getline(cells, cell, ',')) {
      if (i < 5 || i > 7) out += cell + ",";
      ++i;
    }
    out += "\n";
  }
  return out;
}

TEST(RunExperimentsTest, RerunsAreIdenticalOutsideTiming) {
  ExperimentConfig c = Tiny({"bell", "stevens_packed"}, 2);
  c.delta = 0.2;
  c.clients = {10};
  c.latency.model = LatencySpec::Model::kConstant;
  c.latency.constant_ms = 20;
  std::ostringstream a, b;
  RunExperiments(c, &a);
  RunExperiments(c, &b);
  EXPECT_EQ(NonTimingColumns(a.str()), NonTimingColumns(b.str()));
  c.seed = 2;
  std::ostringstream other;
  RunExperiments(c, &other);
  EXPECT_NE(NonTimingColumns(a.str()), NonTimingColumns(other.str()));
}

TEST(RunExperimentsTest, ConstantLatencyShowsUpInTime) {
  ExperimentConfig c = Tiny({"baseline"}, 1);
  c.latency.model = LatencySpec::Model::kConstant;
  c.latency.constant_ms = 100;
  const auto r = RunExperiments(c).at(0);
  EXPECT_NEAR(r.total_time_s, 0.2, 0.02);
}

ExperimentRecord Row(const std::string& protocol, double time, const std::string& status) {
  ExperimentRecord r;
  r.protocol = protocol;
  r.n_clients = 8;
  r.dimension = 10;
  r.status = status;
  r.total_time_s = time;
  r.avg_client_bytes_sent = 2 * time;
  return r;
}

TEST(SummarizeTest, MeanAndStandardError) {
  const auto same = Summarize({Row("a", 4, "success"), Row("a", 4, "success"),
                               Row("a", 4, "success"), Row("a", 4, "success"),
                               Row("a", 4, "success")});
  ASSERT_EQ(same.size(), 1u);
  EXPECT_DOUBLE_EQ(*same[0].metrics.at("total_time_s").mean, 4);
  EXPECT_DOUBLE_EQ(*same[0].metrics.at("total_time_s").stderr_, 0);

  const auto three = Summarize({Row("b", 1, "success"), Row("b", 2, "success"),
                                Row("b", 3, "success"), Row("b", 100, "failed")});
  const auto& m = three[0].metrics.at("total_time_s");
  // Oracle: sample standard deviation 1 over sqrt(3).
  EXPECT_DOUBLE_EQ(*m.mean, 2);
  EXPECT_NEAR(*m.stderr_, 1 / std::sqrt(3.0), 1e-12);
  EXPECT_DOUBLE_EQ(three[0].failure_rate, 0.25);
  EXPECT_EQ(three[0].runs, 4u);

  const auto failed = Summarize({Row("c", 1, "failed"), Row("c", 2, "stalled")});
  EXPECT_DOUBLE_EQ(failed[0].failure_rate, 1.0);
  EXPECT_FALSE(failed[0].metrics.at("total_time_s").mean.has_value());
  std::ostringstream out;
  WriteSummary(out, failed);
  EXPECT_NE(out.str().find("c,8,10,2,1,,"), std::string::npos);
}

TEST(SummarizeTest, CsvRoundTripPreservesSummary) {
  const auto records = RunExperiments(Tiny({"baseline", "bonawitz"}, 3));
  std::ostringstream csv;
  WriteRecordHeader(csv);
  for (const auto& r : records) WriteRecord(csv, r);
  std::istringstream in(csv.str());
  std::ostringstream direct, round_trip;
  WriteSummary(direct, Summarize(records));
  WriteSummary(round_trip, Summarize(ReadRecords(in)));
  EXPECT_EQ(direct.str(), round_trip.str());
}

TEST(SummarizeTest, RejectsBadCsv) {
  std::istringstream no_header("protocol\n");
  EXPECT_THROW(ReadRecords(no_header), Error);
  std::istringstream short_row(std::string(kRecordHeader) + "\nbaseline,8\n");
  EXPECT_THROW(ReadRecords(short_row), Error);
}

}  // namespace
}  // namespace secagg_sim
