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

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "secagg_sim/errors.hpp"
#include "secagg_sim/field.hpp"
#include "secagg_sim/kernel.hpp"
#include "secagg_sim/random.hpp"
#include "secagg_sim/wire.hpp"

namespace secagg_sim {

using PeerMessages = std::map<AgentId, Bytes>;

// What a client hands back for one round: an optional payload for the
// server and/or encrypted payloads the server forwards to other clients.
struct ClientReply {
  std::optional<Bytes> to_server;
  PeerMessages to_peers;

  static ClientReply ToServer(Bytes b) { return ClientReply{std::move(b), {}}; }
  static ClientReply ToPeers(PeerMessages m) {
    return ClientReply{std::nullopt, std::move(m)};
  }

  Bytes Encode() const {
    ByteWriter w;
    w.U8(to_server ? 1 : 0);
    if (to_server) w.Blob(*to_server);
    w.U32(static_cast<std::uint32_t>(to_peers.size()));
    for (const auto& [dst, payload] : to_peers) w.U32(dst.index).Blob(payload);
    return w.Take();
  }

  static ClientReply Decode(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    ClientReply out;
    if (r.U8()) out.to_server = r.Blob();
    const std::uint32_t count = r.U32();
    for (std::uint32_t i = 0; i < count; ++i) {
      const AgentId dst{r.U32()};
      out.to_peers.emplace(dst, r.Blob());
    }
    r.ExpectDone();
    return out;
  }
};

using Inbox = std::map<AgentId, ClientReply>;
using Outbound = std::map<AgentId, Bytes>;

// {src: {dst: payload}} -> {dst: {src: payload}}. Payloads are moved
// through untouched; the server never opens them.
inline std::map<AgentId, PeerMessages> RouteMessages(
    std::map<AgentId, PeerMessages> messages) {
  std::map<AgentId, PeerMessages> routed;
  for (auto& [src, inner] : messages) {
    for (auto& [dst, payload] : inner) routed[dst].emplace(src, std::move(payload));
  }
  return routed;
}

// Number of replies the server needs before moving on when up to a
// fraction `delta` of the `expected` clients may drop:
// floor((1 - delta) * expected).
inline std::size_t RequiredResponses(std::size_t expected, double delta) {
  return static_cast<std::size_t>(
      std::floor((1.0 - delta) * static_cast<double>(expected) + 1e-9));
}

inline bool DefaultNextRound(std::size_t received, std::size_t expected,
                             double delta) {
  return received > 0 && received >= RequiredResponses(expected, delta);
}

class ClientProtocol {
 public:
  virtual ~ClientProtocol() = default;
  // Handles the server's round-`round` message. nullopt means the client
  // has nothing more to say and leaves.
  virtual std::optional<ClientReply> Round(std::uint32_t round,
                                           std::span<const std::uint8_t> message) = 0;
};

class ServerContext {
 public:
  explicit ServerContext(Context& ctx) : ctx_(ctx) {}
  void Succeed(FieldVector result) { ctx_.Succeed(std::move(result)); }
  void Fail(std::string reason) { ctx_.Fail(std::move(reason)); }
  Nanoseconds now() const { return ctx_.now(); }

 private:
  Context& ctx_;
};

class ServerProtocol {
 public:
  explicit ServerProtocol(double delta = 0.0) : delta_(delta) {}
  virtual ~ServerProtocol() = default;

  // Round 1 gets an empty inbox; round r > 1 gets the clients' replies to
  // round r - 1. Returns the messages to send for round r.
  virtual Outbound Round(ServerContext& ctx, std::uint32_t round, Inbox& messages) = 0;

  virtual bool NextRound(std::uint32_t /*round*/, const Inbox& messages,
                         std::size_t expected) const {
    return DefaultNextRound(messages.size(), expected, delta_);
  }

  double delta() const { return delta_; }

 private:
  double delta_;
};

// Which clients drop, and at which client round. A client with drop round r
// never handles the server's round-r message or anything after it.
class DropoutPlan {
 public:
  explicit DropoutPlan(std::size_t n_clients = 0) : drop_round_(n_clients + 1) {}

  // round(delta * n) distinct clients, each leaving at a uniform round in
  // [1, rounds].
  static DropoutPlan Random(std::size_t n_clients, double delta,
                            std::uint32_t rounds, std::uint64_t seed) {
    DropoutPlan plan(n_clients);
    const auto count = static_cast<std::size_t>(
        std::llround(delta * static_cast<double>(n_clients)));
    SeededRng rng(seed);
    std::vector<std::uint32_t> ids(n_clients);
    for (std::size_t i = 0; i < n_clients; ++i) ids[i] = static_cast<std::uint32_t>(i + 1);
    rng.Shuffle(ids.begin(), ids.end());
    for (std::size_t i = 0; i < std::min(count, n_clients); ++i) {
      plan.drop_round_[ids[i]] =
          static_cast<std::uint32_t>(1 + rng.UniformBelow(std::max<std::uint32_t>(rounds, 1)));
    }
    return plan;
  }

  void SetDropRound(AgentId client, std::uint32_t round) {
    drop_round_.at(client.index) = round;
  }
  std::optional<std::uint32_t> drop_round(AgentId client) const {
    return drop_round_.at(client.index);
  }
  bool DropsAt(AgentId client, std::uint32_t round) const {
    const auto& r = drop_round_.at(client.index);
    return r && round >= *r;
  }
  std::size_t dropped_count() const {
    std::size_t c = 0;
    for (const auto& r : drop_round_) c += r.has_value();
    return c;
  }
  std::size_t n_clients() const { return drop_round_.size() - 1; }

 private:
  std::vector<std::optional<std::uint32_t>> drop_round_;
};

class ClientAgent final : public Agent {
 public:
  explicit ClientAgent(ClientProtocol& protocol) : protocol_(protocol) {}

  void OnMessage(Context& ctx, Message& message) override {
    if (!message.src.is_server()) return;
    std::optional<ClientReply> reply;
    try {
      reply = protocol_.Round(message.round, message.payload);
    } catch (const std::exception&) {
      ctx.DropSelf();
      return;
    }
    if (!reply) {
      ctx.DropSelf();
      return;
    }
    ctx.Send(kServerId, message.round, reply->Encode());
  }

 private:
  ClientProtocol& protocol_;
};

// Round-gated server. A round closes once every client the server wrote to
// has either replied or disconnected; NextRound then decides between moving
// on and failing. Waiting for every live client keeps the set of inputs
// that make it into each round independent of measured compute times.
class AggregationServer final : public Agent {
 public:
  explicit AggregationServer(ServerProtocol& protocol) : protocol_(protocol) {}

  void OnStart(Context& ctx) override {
    Inbox empty;
    Advance(ctx, 1, empty);
  }

  void OnMessage(Context& ctx, Message& message) override {
    const AgentId src = message.src;
    if (message.round != round_ || !pending_.contains(src)) return;
    pending_.erase(src);
    try {
      inbox_.emplace(src, ClientReply::Decode(message.payload));
    } catch (const Error&) {
      // Malformed replies count like a dropout.
    }
    MaybeClose(ctx);
  }

  void OnDisconnect(Context& ctx, AgentId client) override {
    gone_.insert(client);
    if (pending_.erase(client)) MaybeClose(ctx);
  }

  std::uint32_t round() const { return round_; }

 private:
  void MaybeClose(Context& ctx) {
    if (!pending_.empty() || finished_) return;
    if (!protocol_.NextRound(round_, inbox_, expected_)) {
      finished_ = true;
      ctx.Fail("round " + std::to_string(round_) + ": " +
               std::to_string(inbox_.size()) + " of " + std::to_string(expected_) +
               " expected responses");
      return;
    }
    Inbox inbox = std::move(inbox_);
    inbox_.clear();
    Advance(ctx, round_ + 1, inbox);
  }

  void Advance(Context& ctx, std::uint32_t round, Inbox& inbox) {
    round_ = round;
    ServerContext sctx(ctx);
    Outbound out;
    try {
      out = protocol_.Round(sctx, round, inbox);
    } catch (const Error& e) {
      finished_ = true;
      ctx.Fail(e.what());
      return;
    }
    if (ctx.terminating()) {
      finished_ = true;
      return;
    }
    expected_ = 0;
    for (auto& [dst, payload] : out) {
      if (gone_.contains(dst)) continue;
      pending_.insert(dst);
      ++expected_;
      ctx.Send(dst, round, std::move(payload));
    }
    if (expected_ == 0) {
      finished_ = true;
      ctx.Fail("round " + std::to_string(round) + ": no clients left to contact");
    }
  }

  ServerProtocol& protocol_;
  std::uint32_t round_ = 0;
  std::size_t expected_ = 0;
  std::set<AgentId> pending_;
  std::set<AgentId> gone_;
  Inbox inbox_;
  bool finished_ = false;
};

}  // namespace secagg_sim
