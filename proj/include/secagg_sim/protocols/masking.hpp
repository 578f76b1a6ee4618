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
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "secagg_sim/crypto.hpp"
#include "secagg_sim/protocols/common.hpp"
#include "secagg_sim/protocols/harary.hpp"
#include "secagg_sim/shamir.hpp"

namespace secagg_sim {

// Double-masking aggregation over a mask graph. Each client u submits
//
//   y_u = x_u + PRNG(b_u) + sum_{v in N(u), u < v} PRNG(s_uv)
//                         - sum_{v in N(u), v < u} PRNG(s_vu)
//
// Round 1 advertises two public keys (channel and mask), round 2 shares b_u
// and the mask private key with u and its neighbors, round 3 uploads y_u,
// round 4 answers the server's unmasking request: b-shares for survivors,
// key shares for clients that dropped after sharing.
//
// A complete graph is the pairwise-masking protocol with O(n + l) traffic
// per client; a Harary graph of degree k gives O(k + l).
namespace masking_internal {

enum class ShareKind : std::uint8_t { kPersonalSeed = 0, kMaskKey = 1 };

struct PeerKeys {
  Key32 channel{};
  Key32 mask{};
};

struct TopologyInfo {
  std::uint32_t n = 0;
  std::uint32_t k = 0;
  bool random = false;
  std::uint64_t seed = 0;

  Bytes Encode() const {
    ByteWriter w;
    w.U32(n).U32(k).U8(random ? 1 : 0).U64(seed);
    return w.Take();
  }
  static TopologyInfo Decode(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    TopologyInfo t;
    t.n = r.U32();
    t.k = r.U32();
    t.random = r.U8() != 0;
    t.seed = r.U64();
    r.ExpectDone();
    return t;
  }
  HararyTopology Build() const {
    const std::uint32_t degree = std::min(k, n - 1);
    return HararyTopology(n, degree, random ? std::optional<std::uint64_t>(seed)
                                            : std::nullopt);
  }
};

inline std::vector<AgentId> NeighborIds(const HararyTopology& topo, AgentId id) {
  std::vector<AgentId> out;
  for (std::uint32_t v : topo.NeighborsOf(id.index - 1)) out.push_back(AgentId{v + 1});
  return out;
}

inline std::uint32_t RecoveryThreshold(const ProtocolConfig& config, std::uint32_t holders) {
  std::uint32_t r = config.recovery_threshold.value_or((2 * holders + 2) / 3);
  return std::clamp<std::uint32_t>(r, 2, std::max<std::uint32_t>(holders, 2));
}

}  // namespace masking_internal

class MaskingClient : public ClientProtocol {
 public:
  MaskingClient(const ProtocolConfig& config, AgentId id, FieldVector input)
      : config_(config), id_(id), input_(std::move(input)),
        rng_(ClientRng(config.seed, id)) {}

  std::optional<ClientReply> Round(std::uint32_t round,
                                   std::span<const std::uint8_t> message) override {
    switch (round) {
      case 1: return AdvertiseKeys(message);
      case 2: return ShareSecrets(message);
      case 3: return SubmitMaskedInput(message);
      case 4: return Unmask(message);
      default: return ClientReply{};
    }
  }

  const MaskSeed& personal_seed() const { return personal_seed_; }
  const Key32& mask_private_key() const { return mask_keys_.private_key; }

 private:
  using ShareKind = masking_internal::ShareKind;

  ClientReply AdvertiseKeys(std::span<const std::uint8_t> message) {
    (void)masking_internal::TopologyInfo::Decode(message);
    channel_keys_ = GenerateKeyPair(rng_);
    mask_keys_ = GenerateKeyPair(rng_);
    ByteWriter w;
    w.Raw(channel_keys_.public_key).Raw(mask_keys_.public_key);
    return ClientReply::ToServer(w.Take());
  }

  ClientReply ShareSecrets(std::span<const std::uint8_t> message) {
    ByteReader r(message);
    const std::uint32_t count = r.U32();
    std::vector<FieldElement> points{PointOf(id_)};
    for (std::uint32_t i = 0; i < count; ++i) {
      const AgentId peer{r.U32()};
      masking_internal::PeerKeys keys;
      auto c = r.Raw(32);
      std::copy(c.begin(), c.end(), keys.channel.begin());
      auto m = r.Raw(32);
      std::copy(m.begin(), m.end(), keys.mask.begin());
      peers_.emplace(peer, keys);
      points.push_back(PointOf(peer));
    }
    r.ExpectDone();
    std::sort(points.begin(), points.end());

    const auto holders = static_cast<std::uint32_t>(points.size());
    ShareParams params;
    params.n = holders;
    params.t = masking_internal::RecoveryThreshold(config_, holders) - 1;
    params.pack_k = 1;

    personal_seed_ = MaskSeed{rng_.Bytes<32>()};
    const Field& field = config_.field;
    auto seed_shares = ShareAt(field, KeyToLimbs(field, personal_seed_.bytes),
                               params, points, rng_);
    auto key_shares = ShareAt(field, KeyToLimbs(field, mask_keys_.private_key),
                              params, points, rng_);

    ClientReply reply;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const AgentId holder{points[i].value};
      if (holder == id_) {
        held_.emplace(id_, HeldShares{std::move(seed_shares[i]), std::move(key_shares[i])});
        continue;
      }
      const Key32 channel =
          ChannelKey(Agree(channel_keys_.private_key, peers_.at(holder).channel));
      channel_cache_.emplace(holder, channel);
      ByteWriter w;
      w.Share(seed_shares[i]).Share(key_shares[i]);
      reply.to_peers.emplace(holder, Encrypt(channel, w.Take(), MakeNonce(2, id_.index)));
    }
    return reply;
  }

  ClientReply SubmitMaskedInput(std::span<const std::uint8_t> message) {
    const Field& field = config_.field;
    ByteReader r(message);
    const std::uint32_t count = r.U32();
    FieldVector y = input_;
    ApplyMask(field, y, personal_seed_, false);
    for (std::uint32_t i = 0; i < count; ++i) {
      const AgentId src{r.U32()};
      const Bytes ciphertext = r.Blob();
      const Bytes plain =
          Decrypt(channel_cache_.at(src), ciphertext, MakeNonce(2, src.index));
      ByteReader pr(plain);
      HeldShares shares{pr.Share(field), pr.Share(field)};
      pr.ExpectDone();
      held_.emplace(src, std::move(shares));
      // Only peers that shared their secrets take part in masking: the
      // server can unmask exactly those if they drop later.
      const MaskSeed s =
          PairwiseMaskSeed(Agree(mask_keys_.private_key, peers_.at(src).mask));
      ApplyMask(field, y, s, /*subtract=*/src < id_);
    }
    r.ExpectDone();
    ByteWriter w;
    w.Vector(y);
    return ClientReply::ToServer(w.Take());
  }

  ClientReply Unmask(std::span<const std::uint8_t> message) {
    ByteReader r(message);
    std::set<AgentId> survivors{id_};
    const std::uint32_t count = r.U32();
    for (std::uint32_t i = 0; i < count; ++i) survivors.insert(AgentId{r.U32()});
    r.ExpectDone();

    ByteWriter w;
    w.U32(static_cast<std::uint32_t>(held_.size()));
    for (const auto& [owner, shares] : held_) {
      const bool alive = survivors.contains(owner);
      w.U32(owner.index);
      w.U8(static_cast<std::uint8_t>(alive ? ShareKind::kPersonalSeed : ShareKind::kMaskKey));
      w.Share(alive ? shares.seed : shares.key);
    }
    return ClientReply::ToServer(w.Take());
  }

  struct HeldShares {
    ShareArray seed;
    ShareArray key;
  };

  ProtocolConfig config_;
  AgentId id_;
  FieldVector input_;
  SeededRng rng_;
  KeyPair channel_keys_;
  KeyPair mask_keys_;
  MaskSeed personal_seed_;
  std::map<AgentId, masking_internal::PeerKeys> peers_;
  std::map<AgentId, Key32> channel_cache_;
  std::map<AgentId, HeldShares> held_;
};

class MaskingServer : public ServerProtocol {
 public:
  explicit MaskingServer(const ProtocolConfig& config)
      : ServerProtocol(config.delta),
        config_(config),
        topology_info_{config.n_clients, std::max<std::uint32_t>(config.graph_k, 1),
                       config.random_graph, config.graph_seed},
        topology_(topology_info_.Build()),
        masked_sum_(config.dimension) {}

  Outbound Round(ServerContext& ctx, std::uint32_t round, Inbox& messages) override {
    switch (round) {
      case 1: return Broadcast(AllClients(config_.n_clients), topology_info_.Encode());
      case 2: return DistributeKeys(messages);
      case 3: return RouteShares(messages);
      case 4: return RequestUnmasking(messages);
      case 5: Finish(ctx, messages); return {};
      default: return {};
    }
  }

  const std::map<AgentId, MaskSeed>& recovered_seeds() const { return recovered_seeds_; }
  const std::map<AgentId, Key32>& recovered_mask_keys() const { return recovered_keys_; }
  const std::set<AgentId>& survivors() const { return survivors_; }
  const HararyTopology& topology() const { return topology_; }

 private:
  using ShareKind = masking_internal::ShareKind;

  Outbound DistributeKeys(Inbox& messages) {
    for (const auto& [id, reply] : messages) {
      if (!reply.to_server || reply.to_server->size() != 64) continue;
      masking_internal::PeerKeys keys;
      std::copy_n(reply.to_server->begin(), 32, keys.channel.begin());
      std::copy_n(reply.to_server->begin() + 32, 32, keys.mask.begin());
      keys_.emplace(id, keys);
    }
    Outbound out;
    for (const auto& [id, unused] : keys_) {
      ByteWriter w;
      std::vector<AgentId> live;
      for (AgentId v : masking_internal::NeighborIds(topology_, id)) {
        if (keys_.contains(v)) live.push_back(v);
      }
      w.U32(static_cast<std::uint32_t>(live.size()));
      for (AgentId v : live) {
        const auto& k = keys_.at(v);
        w.U32(v.index).Raw(k.channel).Raw(k.mask);
      }
      out.emplace(id, w.Take());
    }
    return out;
  }

  Outbound RouteShares(Inbox& messages) {
    std::map<AgentId, PeerMessages> uploads;
    for (auto& [id, reply] : messages) {
      shared_.insert(id);
      uploads.emplace(id, std::move(reply.to_peers));
    }
    auto routed = RouteMessages(std::move(uploads));
    Outbound out;
    for (AgentId id : shared_) {
      ByteWriter w;
      const auto& bundle = routed[id];
      w.U32(static_cast<std::uint32_t>(bundle.size()));
      for (const auto& [src, payload] : bundle) w.U32(src.index).Blob(payload);
      out.emplace(id, w.Take());
    }
    return out;
  }

  Outbound RequestUnmasking(Inbox& messages) {
    const Field& field = config_.field;
    for (const auto& [id, reply] : messages) {
      if (!reply.to_server || !shared_.contains(id)) continue;
      ByteReader r(*reply.to_server);
      FieldVector y = r.Vector(field);
      AddInPlace(field, masked_sum_, y);
      survivors_.insert(id);
    }
    Outbound out;
    for (AgentId id : survivors_) {
      std::vector<AgentId> alive;
      for (AgentId v : masking_internal::NeighborIds(topology_, id)) {
        if (survivors_.contains(v)) alive.push_back(v);
      }
      ByteWriter w;
      w.U32(static_cast<std::uint32_t>(alive.size()));
      for (AgentId v : alive) w.U32(v.index);
      out.emplace(id, w.Take());
    }
    return out;
  }

  void Finish(ServerContext& ctx, Inbox& messages) {
    const Field& field = config_.field;
    std::map<AgentId, std::vector<ShareArray>> seed_shares;
    std::map<AgentId, std::vector<ShareArray>> key_shares;
    for (const auto& [holder, reply] : messages) {
      if (!reply.to_server) continue;
      ByteReader r(*reply.to_server);
      const std::uint32_t count = r.U32();
      for (std::uint32_t i = 0; i < count; ++i) {
        const AgentId owner{r.U32()};
        const auto kind = static_cast<ShareKind>(r.U8());
        ShareArray share = r.Share(field);
        const bool alive = survivors_.contains(owner);
        if ((kind == ShareKind::kPersonalSeed) != alive) {
          ctx.Fail("client " + std::to_string(holder.index) +
                   " answered for " + std::to_string(owner.index) +
                   " with the wrong share kind");
          return;
        }
        (alive ? seed_shares : key_shares)[owner].push_back(std::move(share));
      }
    }

    FieldVector total = masked_sum_;
    for (AgentId u : survivors_) {
      const Key32 seed = LimbsToKey(field, Reconstruct(field, seed_shares[u]));
      recovered_seeds_.emplace(u, MaskSeed{seed});
      ApplyMask(field, total, MaskSeed{seed}, /*subtract=*/true);
    }
    for (AgentId u : shared_) {
      if (survivors_.contains(u)) continue;
      const Key32 sk = LimbsToKey(field, Reconstruct(field, key_shares[u]));
      recovered_keys_.emplace(u, sk);
      for (AgentId v : masking_internal::NeighborIds(topology_, u)) {
        if (!survivors_.contains(v)) continue;
        // v added +PRNG(s_uv) when v < u and -PRNG(s_uv) otherwise.
        const MaskSeed s = PairwiseMaskSeed(Agree(sk, keys_.at(v).mask));
        ApplyMask(field, total, s, /*subtract=*/v < u);
      }
    }
    ctx.Succeed(std::move(total));
  }

  ProtocolConfig config_;
  masking_internal::TopologyInfo topology_info_;
  HararyTopology topology_;
  std::map<AgentId, masking_internal::PeerKeys> keys_;
  std::set<AgentId> shared_;
  std::set<AgentId> survivors_;
  FieldVector masked_sum_;
  std::map<AgentId, MaskSeed> recovered_seeds_;
  std::map<AgentId, Key32> recovered_keys_;
};

// Graph-restricted masking with a degree-k Harary graph.
inline ProtocolSetup MakeBell(const ProtocolConfig& config, std::vector<FieldVector> inputs) {
  ProtocolSetup setup;
  setup.server = std::make_unique<MaskingServer>(config);
  for (std::uint32_t i = 0; i < inputs.size(); ++i) {
    setup.clients.push_back(
        std::make_unique<MaskingClient>(config, AgentId{i + 1}, std::move(inputs[i])));
  }
  setup.client_rounds = 4;
  return setup;
}

// Pairwise masking between every pair of clients (complete graph).
inline ProtocolSetup MakeBonawitz(ProtocolConfig config, std::vector<FieldVector> inputs) {
  config.graph_k = config.n_clients > 1 ? config.n_clients - 1 : 1;
  config.random_graph = false;
  return MakeBell(config, std::move(inputs));
}

}  // namespace secagg_sim
