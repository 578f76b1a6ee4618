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

#include <time.h>

#include <algorithm>
#include <compare>
#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "secagg_sim/errors.hpp"
#include "secagg_sim/field.hpp"
#include "secagg_sim/network.hpp"
#include "secagg_sim/random.hpp"

namespace secagg_sim {

using Bytes = std::vector<std::uint8_t>;

// 0 is the server, 1..n are clients.
struct AgentId {
  std::uint32_t index = 0;

  bool is_server() const { return index == 0; }
  friend auto operator<=>(AgentId, AgentId) = default;
};

inline constexpr AgentId kServerId{0};

// src, dst, round and payload length, 4 bytes each.
inline constexpr std::uint64_t kEnvelopeBytes = 16;

struct Message {
  AgentId src;
  AgentId dst;
  std::uint32_t round = 0;
  Bytes payload{};
  std::uint64_t size_bytes = 0;
};

enum class EventKind { kStart, kDeliver, kDisconnect };

struct Event {
  Nanoseconds deliver_at = 0;
  std::uint64_t sequence = 0;
  EventKind kind = EventKind::kDeliver;
  Message message;
};

struct ClockAccount {
  std::vector<Nanoseconds> compute;
  std::vector<std::uint64_t> bytes_sent;
  std::vector<std::uint64_t> bytes_received;

  explicit ClockAccount(std::size_t agents = 0)
      : compute(agents, 0), bytes_sent(agents, 0), bytes_received(agents, 0) {}
};

enum class SimulationStatus { kSucceeded, kFailed, kStalled, kAgentError };

inline std::string_view StatusName(SimulationStatus s) {
  switch (s) {
    case SimulationStatus::kSucceeded: return "success";
    case SimulationStatus::kFailed: return "failed";
    case SimulationStatus::kStalled: return "stalled";
    case SimulationStatus::kAgentError: return "agent_error";
  }
  return "unknown";
}

// Logical delivery record, used to compare runs for determinism.
struct DeliveryRecord {
  AgentId src;
  AgentId dst;
  std::uint32_t round;
  std::uint64_t size_bytes;
  friend bool operator==(const DeliveryRecord&, const DeliveryRecord&) = default;
};

struct SimulationResult {
  SimulationStatus status = SimulationStatus::kStalled;
  Nanoseconds total_time = 0;
  ClockAccount accounts;
  std::optional<FieldVector> output;
  std::string reason;
  std::optional<AgentId> error_agent;
  std::vector<AgentId> dropped;
  std::uint64_t bytes_to_dropped = 0;
  std::uint64_t bytes_in_flight = 0;
  std::uint64_t events_processed = 0;
  // Per-agent delivery sequences; filled when SimulationOptions::record_trace.
  std::vector<std::vector<DeliveryRecord>> trace;
};

class Context;

class Agent {
 public:
  virtual ~Agent() = default;
  virtual void OnStart(Context&) {}
  virtual void OnMessage(Context& ctx, Message& message) = 0;
  // A client connection closed; only delivered to the server.
  virtual void OnDisconnect(Context&, AgentId) {}
};

struct SimulationOptions {
  std::uint64_t seed = 0;
  // Multiplies every measured handler duration.
  double calibration_scale = 1.0;
  // Returns true when `client` is gone before it would handle `round`.
  std::function<bool(AgentId client, std::uint32_t round)> drop_filter;
  bool record_trace = false;
};

class Kernel;

// Handle given to an agent while one of its handlers runs.
class Context {
 public:
  AgentId self() const { return self_; }
  Nanoseconds now() const { return now_; }
  std::size_t agent_count() const;

  // Queues `payload` for `dst`; it leaves when the handler returns.
  void Send(AgentId dst, std::uint32_t round, Bytes payload);
  void Succeed(FieldVector result);
  void Fail(std::string reason);
  // The calling client leaves the simulation; the server is notified.
  void DropSelf() { dropped_self_ = true; }
  // True once Succeed or Fail has been called during this handler.
  bool terminating() const;

 private:
  friend class Kernel;
  Context(Kernel& kernel, AgentId self, Nanoseconds now)
      : kernel_(kernel), self_(self), now_(now) {}

  Kernel& kernel_;
  AgentId self_;
  Nanoseconds now_;
  std::vector<Message> outbox_;
  bool dropped_self_ = false;
};

// Single-threaded discrete-event loop. Each handler's CPU time is measured
// and becomes simulated time on that agent's own timeline, so clients that
// run in the same round overlap (parallel execution) while one agent's
// handlers serialize.
class Kernel {
 public:
  Kernel(std::span<Agent* const> agents, const LatencyMatrix& latency,
         SimulationOptions options)
      : agents_(agents.begin(), agents.end()),
        latency_(latency),
        options_(std::move(options)),
        busy_until_(agents_.size(), 0),
        dropped_(agents_.size(), false) {
    if (agents_.empty()) throw Error(ErrorCode::kInvalidParams, "no agents");
    if (latency_.size() != agents_.size()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "latency matrix covers " + std::to_string(latency_.size()) +
                      " parties, simulation has " + std::to_string(agents_.size()));
    }
    result_.accounts = ClockAccount(agents_.size());
    if (options_.record_trace) result_.trace.resize(agents_.size());
  }

  SimulationResult Run() {
    Push(Event{0, next_sequence_++, EventKind::kStart, Message{kServerId, kServerId}});
    while (!queue_.empty() && !terminated_) {
      std::pop_heap(queue_.begin(), queue_.end(), Later);
      Event ev = std::move(queue_.back());
      queue_.pop_back();
      ++result_.events_processed;
      Dispatch(ev);
    }
    if (!terminated_) {
      result_.status = SimulationStatus::kStalled;
      result_.reason = "event queue drained before the server finished";
    }
    for (const Event& ev : queue_) {
      if (ev.kind == EventKind::kDeliver) result_.bytes_in_flight += ev.message.size_bytes;
    }
    for (std::size_t i = 0; i < dropped_.size(); ++i) {
      if (dropped_[i]) result_.dropped.push_back(AgentId{static_cast<std::uint32_t>(i)});
    }
    return std::move(result_);
  }

 private:
  friend class Context;

  static bool Later(const Event& a, const Event& b) {
    if (a.deliver_at != b.deliver_at) return a.deliver_at > b.deliver_at;
    return a.sequence > b.sequence;
  }

  void Push(Event ev) {
    queue_.push_back(std::move(ev));
    std::push_heap(queue_.begin(), queue_.end(), Later);
  }

  static Nanoseconds ThreadCpuNow() {
    timespec ts{};
    clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
    return Nanoseconds{ts.tv_sec} * kSecond + ts.tv_nsec;
  }

  void Dispatch(Event& ev) {
    const AgentId dst = ev.message.dst;
    if (ev.kind == EventKind::kDeliver) {
      if (dropped_[dst.index]) {
        result_.bytes_to_dropped += ev.message.size_bytes;
        return;
      }
      if (!dst.is_server() && options_.drop_filter &&
          options_.drop_filter(dst, ev.message.round)) {
        result_.bytes_to_dropped += ev.message.size_bytes;
        MarkDropped(dst, ev.deliver_at);
        return;
      }
      result_.accounts.bytes_received[dst.index] += ev.message.size_bytes;
      if (options_.record_trace) {
        result_.trace[dst.index].push_back(DeliveryRecord{
            ev.message.src, dst, ev.message.round, ev.message.size_bytes});
      }
    }

    const Nanoseconds start = std::max(ev.deliver_at, busy_until_[dst.index]);
    Context ctx(*this, dst, start);
    Agent& agent = *agents_[dst.index];
    const Nanoseconds t0 = ThreadCpuNow();
    try {
      switch (ev.kind) {
        case EventKind::kStart: agent.OnStart(ctx); break;
        case EventKind::kDeliver: agent.OnMessage(ctx, ev.message); break;
        case EventKind::kDisconnect: agent.OnDisconnect(ctx, ev.message.src); break;
      }
    } catch (const std::exception& e) {
      Terminate(SimulationStatus::kAgentError, std::string(e.what()), dst, start);
      return;
    }
    const Nanoseconds measured = ThreadCpuNow() - t0;
    const Nanoseconds elapsed = std::max<Nanoseconds>(
        1, static_cast<Nanoseconds>(static_cast<double>(measured) *
                                    options_.calibration_scale));
    result_.accounts.compute[dst.index] += elapsed;
    const Nanoseconds done = start + elapsed;
    busy_until_[dst.index] = done;

    if (pending_status_) {
      Terminate(*pending_status_, pending_reason_, std::nullopt, done);
      result_.output = std::move(pending_output_);
      return;
    }
    if (ctx.dropped_self_ && !dst.is_server()) {
      MarkDropped(dst, done);
      return;
    }
    for (Message& m : ctx.outbox_) {
      const Nanoseconds delay = SampleDelay(m.src, m.dst);
      result_.accounts.bytes_sent[m.src.index] += m.size_bytes;
      Push(Event{done + delay, next_sequence_++, EventKind::kDeliver, std::move(m)});
    }
  }

  Nanoseconds SampleDelay(AgentId src, AgentId dst) {
    if (latency_.noise().kind == NoiseModel::Kind::kNone) {
      return latency_.Delay(src.index, dst.index);
    }
    // Per-link counters keep jitter independent of global event order.
    const std::uint64_t link = (std::uint64_t{src.index} << 32) | dst.index;
    SeededRng rng(SeedHasher(options_.seed).Mix(link).Mix(link_counter_[link]++).value());
    return latency_.SampleDelay(src.index, dst.index, rng);
  }

  void MarkDropped(AgentId client, Nanoseconds at) {
    dropped_[client.index] = true;
    Push(Event{at + latency_.Delay(client.index, kServerId.index), next_sequence_++,
               EventKind::kDisconnect, Message{client, kServerId}});
  }

  void Terminate(SimulationStatus status, std::string reason,
                 std::optional<AgentId> agent, Nanoseconds at) {
    terminated_ = true;
    result_.status = status;
    result_.reason = std::move(reason);
    result_.error_agent = agent;
    result_.total_time = at;
  }

  std::vector<Agent*> agents_;
  const LatencyMatrix& latency_;
  SimulationOptions options_;
  std::vector<Event> queue_;
  std::uint64_t next_sequence_ = 0;
  std::vector<Nanoseconds> busy_until_;
  std::vector<bool> dropped_;
  std::unordered_map<std::uint64_t, std::uint64_t> link_counter_;
  bool terminated_ = false;
  std::optional<SimulationStatus> pending_status_;
  std::string pending_reason_;
  std::optional<FieldVector> pending_output_;
  SimulationResult result_;
};

inline std::size_t Context::agent_count() const { return kernel_.agents_.size(); }

inline bool Context::terminating() const {
  return kernel_.pending_status_.has_value();
}

inline void Context::Send(AgentId dst, std::uint32_t round, Bytes payload) {
  if (dst.index >= kernel_.agents_.size()) {
    throw Error(ErrorCode::kUnknownDestination,
                "agent " + std::to_string(dst.index) + " does not exist");
  }
  Message m{self_, dst, round, std::move(payload), 0};
  m.size_bytes = kEnvelopeBytes + m.payload.size();
  outbox_.push_back(std::move(m));
}

inline void Context::Succeed(FieldVector result) {
  if (kernel_.pending_status_) {
    throw Error(ErrorCode::kDoubleTermination, "simulation already terminated");
  }
  kernel_.pending_status_ = SimulationStatus::kSucceeded;
  kernel_.pending_output_ = std::move(result);
}

inline void Context::Fail(std::string reason) {
  if (kernel_.pending_status_) {
    throw Error(ErrorCode::kDoubleTermination, "simulation already terminated");
  }
  kernel_.pending_status_ = SimulationStatus::kFailed;
  kernel_.pending_reason_ = std::move(reason);
}

inline SimulationResult RunSimulation(std::span<Agent* const> agents,
                                      const LatencyMatrix& latency,
                                      SimulationOptions options) {
  return Kernel(agents, latency, std::move(options)).Run();
}

}  // namespace secagg_sim
