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

#include <bit>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "secagg_sim/crypto.hpp"
#include "secagg_sim/field.hpp"
#include "secagg_sim/kernel.hpp"
#include "secagg_sim/network.hpp"
#include "secagg_sim/protocol_api.hpp"
#include "secagg_sim/random.hpp"
#include "secagg_sim/wire.hpp"

namespace secagg_sim {

enum class LweError { kNone, kCenteredBinomial };

struct ProtocolConfig {
  Field field;
  std::uint32_t n_clients = 0;
  std::uint64_t dimension = 0;
  // Dropout tolerance used by the round gate.
  double delta = 0.0;
  std::uint64_t seed = 0;

  // LWE masking.
  std::uint32_t s_len = 710;
  std::uint32_t pack_k = 1;
  LweError lwe_error = LweError::kNone;
  std::uint32_t eta = 1;
  std::uint64_t a_seed = 0x5eed;

  // Graph-restricted masking. graph_k >= n - 1 means fully connected.
  std::uint32_t graph_k = 50;
  bool random_graph = false;
  std::uint64_t graph_seed = 0;
  // Shares needed to recover a masking secret; default ceil(2m/3) where m
  // is the number of holders.
  std::optional<std::uint32_t> recovery_threshold;
};

// The parts of one protocol run, ready to hand to the kernel.
struct ProtocolSetup {
  std::unique_ptr<ServerProtocol> server;
  std::vector<std::unique_ptr<ClientProtocol>> clients;  // clients[i] is id i+1
  std::uint32_t client_rounds = 0;
};

struct ProtocolRun {
  SimulationResult sim;
  std::uint32_t rounds_completed = 0;
};

struct RunOptions {
  std::uint64_t seed = 0;
  double calibration_scale = 1.0;
  const DropoutPlan* dropouts = nullptr;
  bool record_trace = false;
};

inline ProtocolRun RunProtocol(ProtocolSetup& setup, const LatencyMatrix& latency,
                               const RunOptions& options) {
  AggregationServer server(*setup.server);
  std::vector<ClientAgent> client_agents;
  client_agents.reserve(setup.clients.size());
  for (auto& c : setup.clients) client_agents.emplace_back(*c);
  std::vector<Agent*> agents;
  agents.push_back(&server);
  for (auto& a : client_agents) agents.push_back(&a);

  SimulationOptions sim_options;
  sim_options.seed = options.seed;
  sim_options.calibration_scale = options.calibration_scale;
  sim_options.record_trace = options.record_trace;
  if (options.dropouts) {
    const DropoutPlan* plan = options.dropouts;
    sim_options.drop_filter = [plan](AgentId client, std::uint32_t round) {
      return plan->DropsAt(client, round);
    };
  }
  ProtocolRun run;
  run.sim = RunSimulation(agents, latency, std::move(sim_options));
  run.rounds_completed = server.round();
  return run;
}

inline SeededRng ClientRng(std::uint64_t seed, AgentId id) {
  return SeededRng(SeedHasher(seed).Mix("client").Mix(id.index).value());
}

inline Outbound Broadcast(const std::vector<AgentId>& clients, const Bytes& payload) {
  Outbound out;
  for (AgentId c : clients) out.emplace(c, payload);
  return out;
}

inline std::vector<AgentId> AllClients(std::uint32_t n) {
  std::vector<AgentId> ids;
  ids.reserve(n);
  for (std::uint32_t i = 1; i <= n; ++i) ids.push_back(AgentId{i});
  return ids;
}

inline FieldElement PointOf(AgentId id) { return FieldElement{id.index}; }

// 32-byte secrets (seeds, private keys) are Shamir-shared as limbs small
// enough to be field elements: 16-bit limbs for q >= 2^16, narrower limbs
// for the tiny test fields.
inline unsigned LimbBits(const Field& field) {
  const unsigned bits = static_cast<unsigned>(std::bit_width(field.modulus())) - 1;
  return bits >= 16 ? 16 : (bits >= 8 ? 8 : (bits >= 4 ? 4 : (bits >= 2 ? 2 : 1)));
}

inline FieldVector KeyToLimbs(const Field& field, const Key32& key) {
  const unsigned bits = LimbBits(field);
  const std::size_t per_byte = bits >= 8 ? 1 : 8 / bits;
  const std::size_t count = bits >= 8 ? 32 * 8 / bits : 32 * per_byte;
  FieldVector out(count);
  if (bits == 16) {
    for (std::size_t i = 0; i < 16; ++i) {
      out[i].value = std::uint32_t{key[2 * i]} | (std::uint32_t{key[2 * i + 1]} << 8);
    }
  } else if (bits == 8) {
    for (std::size_t i = 0; i < 32; ++i) out[i].value = key[i];
  } else {
    const std::uint32_t mask = (1u << bits) - 1;
    for (std::size_t i = 0; i < 32; ++i) {
      for (std::size_t j = 0; j < per_byte; ++j) {
        out[i * per_byte + j].value = (key[i] >> (j * bits)) & mask;
      }
    }
  }
  return out;
}

inline Key32 LimbsToKey(const Field& field, const FieldVector& limbs) {
  const unsigned bits = LimbBits(field);
  Key32 key{};
  if (bits == 16) {
    if (limbs.size() != 16) throw Error(ErrorCode::kMalformedMessage, "limb count");
    for (std::size_t i = 0; i < 16; ++i) {
      if (limbs[i].value >= (1u << 16)) throw Error(ErrorCode::kMalformedMessage, "limb range");
      key[2 * i] = static_cast<std::uint8_t>(limbs[i].value);
      key[2 * i + 1] = static_cast<std::uint8_t>(limbs[i].value >> 8);
    }
  } else if (bits == 8) {
    if (limbs.size() != 32) throw Error(ErrorCode::kMalformedMessage, "limb count");
    for (std::size_t i = 0; i < 32; ++i) key[i] = static_cast<std::uint8_t>(limbs[i].value);
  } else {
    const std::size_t per_byte = 8 / bits;
    if (limbs.size() != 32 * per_byte) throw Error(ErrorCode::kMalformedMessage, "limb count");
    for (std::size_t i = 0; i < 32; ++i) {
      std::uint32_t b = 0;
      for (std::size_t j = 0; j < per_byte; ++j) {
        b |= limbs[i * per_byte + j].value << (j * bits);
      }
      key[i] = static_cast<std::uint8_t>(b);
    }
  }
  return key;
}

// Synthetic client inputs: uniform integers in [0, 100].
inline std::vector<FieldVector> GenerateInputs(const Field& field, std::uint32_t n,
                                               std::uint64_t dimension,
                                               std::uint64_t seed) {
  SeededRng rng(SeedHasher(seed).Mix("inputs").value());
  std::vector<FieldVector> inputs;
  inputs.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    FieldVector v(dimension);
    for (auto& e : v.elements()) e = field.FromU64(rng.UniformBelow(101));
    inputs.push_back(std::move(v));
  }
  return inputs;
}

}  // namespace secagg_sim
