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

#include "secagg_sim/kernel.hpp"

#include <gtest/gtest.h>

#include <memory>
#include <numeric>
#include <vector>

#include "secagg_sim/errors.hpp"
#include "secagg_sim/network.hpp"
#include "test_agents.hpp"

namespace secagg_sim {
namespace {

using testing::EchoClient;
using testing::RoundTripServer;

std::uint64_t Total(const std::vector<std::uint64_t>& v) {
  return std::accumulate(v.begin(), v.end(), std::uint64_t{0});
}

SimulationResult RunWith(Agent& server, std::vector<std::unique_ptr<Agent>>& clients,
                         const LatencyMatrix& latency, SimulationOptions options = {}) {
  std::vector<Agent*> agents = {&server};
  for (auto& c : clients) agents.push_back(c.get());
  return RunSimulation(agents, latency, std::move(options));
}

TEST(KernelTest, DegenerateRunTimeIsHandlerTime) {
  RoundTripServer server(1, 1);
  std::vector<std::unique_ptr<Agent>> clients;
  clients.push_back(std::make_unique<EchoClient>());
  const auto r = RunWith(server, clients, LatencyMatrix::Constant(1, 0));
  ASSERT_EQ(r.status, SimulationStatus::kSucceeded);
  // Zero latency: simulated time is the chain of handler durations.
  const Nanoseconds handlers = r.accounts.compute[0] + r.accounts.compute[1];
  EXPECT_EQ(r.total_time, handlers);
  EXPECT_LT(r.total_time, 5 * kMillisecond);
}

TEST(KernelTest, ParallelClientsTakeTheMaxNotTheSum) {
  RoundTripServer server(2, 1);
  std::vector<std::unique_ptr<Agent>> clients;
  clients.push_back(std::make_unique<EchoClient>(30 * kMillisecond));
  clients.push_back(std::make_unique<EchoClient>(60 * kMillisecond));
  const auto r = RunWith(server, clients, LatencyMatrix::Constant(2, 0));
  ASSERT_EQ(r.status, SimulationStatus::kSucceeded);
  const double t = static_cast<double>(r.total_time);
  EXPECT_NEAR(t, 60e6, 6e6);
  EXPECT_LT(t, 80e6);  // the sum would be 90 ms
}

TEST(KernelTest, ConstantLatencyRoundTrips) {
  for (std::uint32_t rounds : {1u, 3u}) {
    RoundTripServer server(3, rounds);
    std::vector<std::unique_ptr<Agent>> clients;
    for (int i = 0; i < 3; ++i) clients.push_back(std::make_unique<EchoClient>());
    const auto r = RunWith(server, clients, LatencyMatrix::Constant(3, 250 * kMillisecond));
    ASSERT_EQ(r.status, SimulationStatus::kSucceeded);
    const double expected = 2.0 * rounds * 250e6;
    EXPECT_NEAR(static_cast<double>(r.total_time), expected, 0.01 * expected);
  }
}

TEST(KernelTest, ByteAccountingAndEnvelope) {
  RoundTripServer server(4, 2, /*payload=*/0);
  std::vector<std::unique_ptr<Agent>> clients;
  for (int i = 0; i < 4; ++i) clients.push_back(std::make_unique<EchoClient>(0, 400));
  const auto r = RunWith(server, clients, LatencyMatrix::Constant(4, kMillisecond));
  ASSERT_EQ(r.status, SimulationStatus::kSucceeded);
  // Empty payloads cost the envelope only; 400-byte payloads add 400.
  EXPECT_EQ(r.accounts.bytes_sent[0], 2 * 4 * kEnvelopeBytes);
  for (int c = 1; c <= 4; ++c) {
    EXPECT_EQ(r.accounts.bytes_sent[c], 2 * (kEnvelopeBytes + 400));
    EXPECT_EQ(r.accounts.bytes_received[c], 2 * kEnvelopeBytes);
  }
  EXPECT_EQ(Total(r.accounts.bytes_sent), Total(r.accounts.bytes_received));
}

TEST(KernelTest, ByteConservationWithDrops) {
  RoundTripServer server(5, 3, 10);
  std::vector<std::unique_ptr<Agent>> clients;
  for (int i = 0; i < 5; ++i) clients.push_back(std::make_unique<EchoClient>(0, 7));
  SimulationOptions options;
  options.drop_filter = [](AgentId c, std::uint32_t round) { return c.index == 2 && round >= 2; };
  const auto r = RunWith(server, clients, LatencyMatrix::Constant(5, kMillisecond), options);
  // The stub server waits for all 5 replies, so it stalls after the drop.
  EXPECT_EQ(r.status, SimulationStatus::kStalled);
  ASSERT_EQ(r.dropped.size(), 1u);
  EXPECT_EQ(r.dropped[0].index, 2u);
  EXPECT_GT(r.bytes_to_dropped, 0u);
  EXPECT_EQ(Total(r.accounts.bytes_sent),
            Total(r.accounts.bytes_received) + r.bytes_to_dropped + r.bytes_in_flight);
}

class SendToNowhere : public Agent {
 public:
  void OnStart(Context& ctx) override {
    try {
      ctx.Send(AgentId{99}, 1, {});
    } catch (const Error& e) {
      code = e.code();
    }
    ctx.Fail("done");
  }
  void OnMessage(Context&, Message&) override {}
  std::optional<ErrorCode> code;
};

TEST(KernelTest, UnknownDestination) {
  SendToNowhere server;
  std::vector<std::unique_ptr<Agent>> clients;
  const auto r = RunWith(server, clients, LatencyMatrix::Constant(0, 0));
  ASSERT_TRUE(server.code.has_value());
  EXPECT_EQ(*server.code, ErrorCode::kUnknownDestination);
  EXPECT_EQ(r.status, SimulationStatus::kFailed);
  EXPECT_EQ(r.reason, "done");
}

class TerminatesTwice : public Agent {
 public:
  void OnStart(Context& ctx) override {
    ctx.Send(AgentId{1}, 1, {});
    ctx.Succeed(FieldVector(1));
    try {
      ctx.Succeed(FieldVector(1));
    } catch (const Error& e) {
      code = e.code();
    }
  }
  void OnMessage(Context&, Message&) override { ++late_messages; }
  std::optional<ErrorCode> code;
  int late_messages = 0;
};

TEST(KernelTest, DoubleTerminationAndNothingAfterSuccess) {
  TerminatesTwice server;
  std::vector<std::unique_ptr<Agent>> clients;
  clients.push_back(std::make_unique<EchoClient>());
  const auto r = RunWith(server, clients, LatencyMatrix::Constant(1, 0));
  ASSERT_TRUE(server.code.has_value());
  EXPECT_EQ(*server.code, ErrorCode::kDoubleTermination);
  EXPECT_EQ(r.status, SimulationStatus::kSucceeded);
  EXPECT_EQ(server.late_messages, 0);
  EXPECT_EQ(r.accounts.bytes_received[1], 0u);
}

class Throws : public Agent {
 public:
  void OnStart(Context& ctx) override { ctx.Send(AgentId{1}, 1, {}); }
  void OnMessage(Context&, Message&) override {}
};

class ThrowingClient : public Agent {
 public:
  void OnMessage(Context&, Message&) override { throw std::runtime_error("boom"); }
};

TEST(KernelTest, AgentExceptionEndsRun) {
  Throws server;
  std::vector<std::unique_ptr<Agent>> clients;
  clients.push_back(std::make_unique<ThrowingClient>());
  const auto r = RunWith(server, clients, LatencyMatrix::Constant(1, 0));
  EXPECT_EQ(r.status, SimulationStatus::kAgentError);
  ASSERT_TRUE(r.error_agent.has_value());
  EXPECT_EQ(r.error_agent->index, 1u);
  EXPECT_EQ(r.reason, "boom");
}

TEST(KernelTest, LatencyMatrixMustMatchAgents) {
  RoundTripServer server(2, 1);
  std::vector<std::unique_ptr<Agent>> clients;
  clients.push_back(std::make_unique<EchoClient>());
  EXPECT_THROW(RunWith(server, clients, LatencyMatrix::Constant(3, 0)), Error);
}

// Records deliver times so causality can be checked.
class CausalityClient : public Agent {
 public:
  void OnMessage(Context& ctx, Message& m) override {
    starts.push_back(ctx.now());
    ctx.Send(kServerId, m.round, {});
  }
  std::vector<Nanoseconds> starts;
};

TEST(KernelTest, TraceIsDeterministicAndCausal) {
  std::vector<std::vector<std::vector<DeliveryRecord>>> traces;
  for (int rep = 0; rep < 2; ++rep) {
    RoundTripServer server(6, 3, 5);
    std::vector<std::unique_ptr<Agent>> clients;
    for (int i = 0; i < 6; ++i) clients.push_back(std::make_unique<CausalityClient>());
    auto latency = LatencyMatrix::Constant(6, 3 * kMillisecond);
    latency.set_noise(NoiseModel::Default());
    SimulationOptions options;
    options.seed = 17;
    options.record_trace = true;
    const auto r = RunWith(server, clients, latency, options);
    ASSERT_EQ(r.status, SimulationStatus::kSucceeded);
    for (auto& c : clients) {
      const auto& starts = static_cast<CausalityClient&>(*c).starts;
      ASSERT_EQ(starts.size(), 3u);
      for (std::size_t i = 0; i < starts.size(); ++i) {
        // A round-i message leaves the server no earlier than the previous
        // round's replies arrived, and latency is at least 3 ms.
        EXPECT_GE(starts[i], static_cast<Nanoseconds>(i + 1) * 3 * kMillisecond);
      }
    }
    traces.push_back(r.trace);
  }
  EXPECT_EQ(traces[0], traces[1]);
}

}  // namespace
}  // namespace secagg_sim
