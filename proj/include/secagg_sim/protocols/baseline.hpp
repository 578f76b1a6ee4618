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

#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "secagg_sim/protocols/common.hpp"

namespace secagg_sim {

// Insecure reference protocol: clients send plaintext inputs and the
// trusted server adds them up.
class BaselineClient : public ClientProtocol {
 public:
  explicit BaselineClient(FieldVector input) : input_(std::move(input)) {}

  std::optional<ClientReply> Round(std::uint32_t round,
                                   std::span<const std::uint8_t>) override {
    if (round != 1) return ClientReply{};
    ByteWriter w;
    w.Vector(input_);
    return ClientReply::ToServer(w.Take());
  }

 private:
  FieldVector input_;
};

class BaselineServer : public ServerProtocol {
 public:
  explicit BaselineServer(const ProtocolConfig& config)
      : ServerProtocol(config.delta), config_(config) {}

  Outbound Round(ServerContext& ctx, std::uint32_t round, Inbox& messages) override {
    if (round == 1) return Broadcast(AllClients(config_.n_clients), {});
    if (round == 2) {
      FieldVector total(config_.dimension);
      for (auto& [id, reply] : messages) {
        if (!reply.to_server) continue;
        ByteReader r(*reply.to_server);
        AddInPlace(config_.field, total, r.Vector(config_.field));
      }
      ctx.Succeed(std::move(total));
    }
    return {};
  }

 private:
  ProtocolConfig config_;
};

inline ProtocolSetup MakeBaseline(const ProtocolConfig& config,
                                  std::vector<FieldVector> inputs) {
  ProtocolSetup setup;
  setup.server = std::make_unique<BaselineServer>(config);
  for (auto& x : inputs) setup.clients.push_back(std::make_unique<BaselineClient>(std::move(x)));
  setup.client_rounds = 1;
  return setup;
}

}  // namespace secagg_sim
