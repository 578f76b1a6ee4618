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

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "secagg_sim/crypto.hpp"
#include "secagg_sim/protocols/common.hpp"
#include "secagg_sim/shamir.hpp"

namespace secagg_sim {

namespace ss_internal {

inline Bytes EncodeKeyMap(const std::map<AgentId, Key32>& keys) {
  ByteWriter w;
  w.U32(static_cast<std::uint32_t>(keys.size()));
  for (const auto& [id, pk] : keys) w.U32(id.index).Raw(pk);
  return w.Take();
}

inline std::map<AgentId, Key32> DecodeKeyMap(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  std::map<AgentId, Key32> keys;
  const std::uint32_t count = r.U32();
  for (std::uint32_t i = 0; i < count; ++i) {
    const AgentId id{r.U32()};
    auto raw = r.Raw(32);
    Key32 pk{};
    std::copy(raw.begin(), raw.end(), pk.begin());
    keys.emplace(id, pk);
  }
  r.ExpectDone();
  return keys;
}

inline Bytes EncodeBundle(const PeerMessages& bundle) {
  ByteWriter w;
  w.U32(static_cast<std::uint32_t>(bundle.size()));
  for (const auto& [src, payload] : bundle) w.U32(src.index).Blob(payload);
  return w.Take();
}

inline PeerMessages DecodeBundle(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  PeerMessages bundle;
  const std::uint32_t count = r.U32();
  for (std::uint32_t i = 0; i < count; ++i) {
    const AgentId src{r.U32()};
    bundle.emplace(src, r.Blob());
  }
  r.ExpectDone();
  return bundle;
}

}  // namespace ss_internal

// Four-round secret-sharing aggregation:
//   1. clients publish a public key;
//   2. each client Shamir-shares its vector to every client (encrypted,
//      routed through the server), keeping one share;
//   3. each client adds up the shares it holds and uploads the sum;
//   4. the server reconstructs the total.
// Each client uploads n shares of its length-l vector in round 2: O(nl).
class SecretSharingClient : public ClientProtocol {
 public:
  SecretSharingClient(const ProtocolConfig& config, AgentId id, FieldVector input)
      : config_(config), id_(id), input_(std::move(input)),
        rng_(ClientRng(config.seed, id)) {}

  std::optional<ClientReply> Round(std::uint32_t round,
                                   std::span<const std::uint8_t> message) override {
    switch (round) {
      case 1: return AdvertiseKey(message);
      case 2: return ShareInput(message);
      case 3: return SumShares(message);
      default: return ClientReply{};
    }
  }

 protected:
  // The vector that gets secret-shared in round 2, plus anything that goes
  // straight to the server alongside the shares.
  virtual FieldVector VectorToShare(std::optional<Bytes>& /*to_server*/) {
    return input_;
  }
  virtual std::uint32_t PackingFactor(std::uint32_t /*holders*/, std::uint32_t /*t*/) const {
    return 1;
  }
  virtual void OnStart(std::span<const std::uint8_t> /*message*/) {}

  const ProtocolConfig& config() const { return config_; }
  AgentId id() const { return id_; }
  const FieldVector& input() const { return input_; }
  SeededRng& rng() { return rng_; }

 private:
  ClientReply AdvertiseKey(std::span<const std::uint8_t> message) {
    OnStart(message);
    keys_ = GenerateKeyPair(rng_);
    return ClientReply::ToServer(Bytes(keys_.public_key.begin(), keys_.public_key.end()));
  }

  ClientReply ShareInput(std::span<const std::uint8_t> message) {
    const auto peer_keys = ss_internal::DecodeKeyMap(message);
    std::vector<FieldElement> points;
    points.reserve(peer_keys.size());
    for (const auto& [peer, pk] : peer_keys) {
      points.push_back(PointOf(peer));
      if (peer != id_) channel_keys_[peer] = ChannelKey(Agree(keys_.private_key, pk));
    }
    const auto holders = static_cast<std::uint32_t>(points.size());
    ShareParams params;
    params.n = holders;
    params.t = std::max<std::uint32_t>(1, holders / 2);
    params.pack_k = PackingFactor(holders, params.t);

    ClientReply reply;
    const FieldVector secret = VectorToShare(reply.to_server);
    auto shares = ShareAt(config_.field, secret, params, points, rng_);
    for (auto& share : shares) {
      const AgentId holder{share.owner_point.value};
      if (holder == id_) {
        own_share_ = std::move(share);
        continue;
      }
      ByteWriter w;
      w.Share(share);
      reply.to_peers.emplace(
          holder, Encrypt(channel_keys_.at(holder), w.Take(), MakeNonce(2, id_.index)));
    }
    return reply;
  }

  ClientReply SumShares(std::span<const std::uint8_t> message) {
    const auto bundle = ss_internal::DecodeBundle(message);
    std::vector<ShareArray> held;
    held.reserve(bundle.size() + 1);
    if (own_share_) held.push_back(std::move(*own_share_));
    for (const auto& [src, ciphertext] : bundle) {
      const Bytes plain =
          Decrypt(channel_keys_.at(src), ciphertext, MakeNonce(2, src.index));
      ByteReader r(plain);
      held.push_back(r.Share(config_.field));
      r.ExpectDone();
    }
    const ShareArray sum = secagg_sim::SumShares(config_.field, held);
    ByteWriter w;
    w.Share(sum);
    return ClientReply::ToServer(w.Take());
  }

  ProtocolConfig config_;
  AgentId id_;
  FieldVector input_;
  SeededRng rng_;
  KeyPair keys_;
  std::map<AgentId, Key32> channel_keys_;
  std::optional<ShareArray> own_share_;
};

class SecretSharingServer : public ServerProtocol {
 public:
  explicit SecretSharingServer(const ProtocolConfig& config)
      : ServerProtocol(config.delta), config_(config) {}

  Outbound Round(ServerContext& ctx, std::uint32_t round, Inbox& messages) override {
    switch (round) {
      case 1:
        return Broadcast(AllClients(config_.n_clients), StartMessage());
      case 2: {
        std::map<AgentId, Key32> keys;
        for (const auto& [id, reply] : messages) {
          if (!reply.to_server || reply.to_server->size() != 32) continue;
          Key32 pk{};
          std::copy(reply.to_server->begin(), reply.to_server->end(), pk.begin());
          keys.emplace(id, pk);
        }
        const Bytes encoded = ss_internal::EncodeKeyMap(keys);
        Outbound out;
        for (const auto& [id, pk] : keys) out.emplace(id, encoded);
        return out;
      }
      case 3: {
        std::map<AgentId, PeerMessages> uploads;
        for (auto& [id, reply] : messages) {
          OnShareUpload(id, reply.to_server);
          uploads.emplace(id, std::move(reply.to_peers));
        }
        std::vector<AgentId> senders;
        for (const auto& [id, unused] : uploads) senders.push_back(id);
        auto routed = RouteMessages(std::move(uploads));
        Outbound out;
        for (AgentId id : senders) {
          out.emplace(id, ss_internal::EncodeBundle(routed[id]));
        }
        return out;
      }
      case 4: {
        std::vector<ShareArray> shares;
        for (const auto& [id, reply] : messages) {
          if (!reply.to_server) continue;
          ByteReader r(*reply.to_server);
          shares.push_back(r.Share(config_.field));
        }
        FieldVector total = Reconstruct(config_.field, shares);
        ctx.Succeed(Finish(std::move(total)));
        return {};
      }
      default:
        return {};
    }
  }

 protected:
  virtual Bytes StartMessage() const { return {}; }
  virtual void OnShareUpload(AgentId, const std::optional<Bytes>&) {}
  // Maps the reconstructed total to the protocol output.
  virtual FieldVector Finish(FieldVector reconstructed) { return reconstructed; }

  const ProtocolConfig& config() const { return config_; }

 private:
  ProtocolConfig config_;
};

inline ProtocolSetup MakeSecretSharing(const ProtocolConfig& config,
                                       std::vector<FieldVector> inputs) {
  ProtocolSetup setup;
  setup.server = std::make_unique<SecretSharingServer>(config);
  for (std::uint32_t i = 0; i < inputs.size(); ++i) {
    setup.clients.push_back(std::make_unique<SecretSharingClient>(
        config, AgentId{i + 1}, std::move(inputs[i])));
  }
  setup.client_rounds = 3;
  return setup;
}

}  // namespace secagg_sim
