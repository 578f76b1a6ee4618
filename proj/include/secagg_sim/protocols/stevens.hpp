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
#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "secagg_sim/crypto.hpp"
#include "secagg_sim/protocols/secret_sharing.hpp"

namespace secagg_sim {

// The public LWE matrix A (l x s), regenerated row by row from a shared
// seed instead of being stored.
class PublicMatrix {
 public:
  PublicMatrix(const Field& field, std::uint64_t seed, std::uint64_t rows,
               std::uint64_t cols)
      : field_(field), rows_(rows), cols_(cols) {
    Key32 raw{};
    for (int i = 0; i < 8; ++i) raw[i] = static_cast<std::uint8_t>(seed >> (8 * i));
    key_ = DeriveSubkey(raw, "secagg-sim/lwe-matrix");
  }

  std::uint64_t rows() const { return rows_; }
  std::uint64_t cols() const { return cols_; }

  // acc += A * s, or acc -= A * s.
  void MultiplyInto(const FieldVector& s, FieldVector& acc, bool subtract) const {
    if (s.size() != cols_ || acc.size() != rows_) {
      throw Error(ErrorCode::kDimensionMismatch, "A is " + std::to_string(rows_) +
                                                     "x" + std::to_string(cols_));
    }
    MaskStream stream(field_, key_);
    std::vector<FieldElement> row(cols_);
    for (std::uint64_t i = 0; i < rows_; ++i) {
      stream.Fill(row);
      const FieldElement d = Dot(field_, row, s.elements());
      acc[i] = subtract ? field_.Sub(acc[i], d) : field_.Add(acc[i], d);
    }
  }

  FieldMatrix Materialize() const {
    FieldMatrix a(rows_, cols_);
    MaskStream stream(field_, key_);
    for (std::uint64_t i = 0; i < rows_; ++i) {
      for (std::uint64_t j = 0; j < cols_; ++j) a.at(i, j) = stream.Next();
    }
    return a;
  }

 private:
  Field field_;
  std::uint64_t rows_;
  std::uint64_t cols_;
  Key32 key_;
};

// Centered binomial sample in [-eta, eta].
inline std::int64_t CenteredBinomial(std::uint32_t eta, SeededRng& rng) {
  std::int64_t v = 0;
  std::uint32_t left = eta;
  while (left > 0) {
    const std::uint32_t take = std::min<std::uint32_t>(left, 32);
    const std::uint64_t bits = rng.NextU64();
    const std::uint64_t mask = take == 32 ? 0xffffffffULL : ((1ULL << take) - 1);
    v += std::popcount(bits & mask) - std::popcount((bits >> 32) & mask);
    left -= take;
  }
  return v;
}

// LWE-masked aggregation: the client sends x + A*S + E to the server and
// runs the secret-sharing protocol on the short vector S instead of x. The
// server reconstructs sum(S) and removes A * sum(S), leaving sum(x) + sum(E).
class StevensClient : public SecretSharingClient {
 public:
  using SecretSharingClient::SecretSharingClient;

 protected:
  void OnStart(std::span<const std::uint8_t> message) override {
    ByteReader r(message);
    a_seed_ = r.U64();
  }

  FieldVector VectorToShare(std::optional<Bytes>& to_server) override {
    const Field& field = config().field;
    FieldVector s = RandomVector(field, config().s_len, rng());
    FieldVector masked = input();
    PublicMatrix(field, a_seed_, config().dimension, config().s_len)
        .MultiplyInto(s, masked, false);
    if (config().lwe_error == LweError::kCenteredBinomial) {
      for (auto& e : masked.elements()) {
        e = field.Add(e, field.FromInt(CenteredBinomial(config().eta, rng())));
      }
    }
    ByteWriter w;
    w.Vector(masked);
    to_server = w.Take();
    return s;
  }

  // Largest packing that still leaves t + k <= the holders the round gate
  // guarantees will answer.
  std::uint32_t PackingFactor(std::uint32_t holders, std::uint32_t t) const override {
    const auto reachable = static_cast<std::int64_t>(RequiredResponses(holders, config().delta));
    const std::int64_t room = reachable - static_cast<std::int64_t>(t);
    return static_cast<std::uint32_t>(
        std::clamp<std::int64_t>(room, 1, std::max<std::uint32_t>(config().pack_k, 1)));
  }

 private:
  std::uint64_t a_seed_ = 0;
};

class StevensServer : public SecretSharingServer {
 public:
  explicit StevensServer(const ProtocolConfig& config)
      : SecretSharingServer(config), masked_sum_(config.dimension) {}

 protected:
  Bytes StartMessage() const override {
    ByteWriter w;
    w.U64(config().a_seed);
    return w.Take();
  }

  void OnShareUpload(AgentId, const std::optional<Bytes>& to_server) override {
    if (!to_server) throw Error(ErrorCode::kMalformedMessage, "missing masked vector");
    ByteReader r(*to_server);
    AddInPlace(config().field, masked_sum_, r.Vector(config().field));
  }

  FieldVector Finish(FieldVector secret_sum) override {
    FieldVector out = masked_sum_;
    PublicMatrix(config().field, config().a_seed, config().dimension, config().s_len)
        .MultiplyInto(secret_sum, out, true);
    return out;
  }

 private:
  FieldVector masked_sum_;
};

inline ProtocolSetup MakeStevens(const ProtocolConfig& config,
                                 std::vector<FieldVector> inputs) {
  ProtocolSetup setup;
  setup.server = std::make_unique<StevensServer>(config);
  for (std::uint32_t i = 0; i < inputs.size(); ++i) {
    setup.clients.push_back(
        std::make_unique<StevensClient>(config, AgentId{i + 1}, std::move(inputs[i])));
  }
  setup.client_rounds = 3;
  return setup;
}

}  // namespace secagg_sim
