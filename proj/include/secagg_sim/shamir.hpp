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
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "secagg_sim/errors.hpp"
#include "secagg_sim/field.hpp"
#include "secagg_sim/random.hpp"

namespace secagg_sim {

// Threshold parameters for (optionally packed) Shamir sharing.
//
// Each block of `pack_k` secrets is embedded in a random polynomial of
// degree t + pack_k - 1, so any `t` shares are uniformly random and any
// t + pack_k shares reconstruct the block. pack_k = 1 is plain Shamir with
// privacy threshold t.
struct ShareParams {
  std::uint32_t n = 0;
  std::uint32_t t = 1;
  std::uint32_t pack_k = 1;
  // Length of the shared vector before padding; filled in by Share().
  std::uint64_t secret_length = 0;

  std::uint32_t required_shares() const { return t + pack_k; }
  std::uint64_t block_count() const {
    return (secret_length + pack_k - 1) / pack_k;
  }

  friend bool operator==(const ShareParams&, const ShareParams&) = default;
};

// One party's share of a whole vector: one field element per block.
struct ShareArray {
  FieldElement owner_point;
  FieldVector values;
  ShareParams params;

  friend bool operator==(const ShareArray&, const ShareArray&) = default;
};

namespace shamir_internal {

// Montgomery batch inversion. All inputs must be nonzero.
inline void BatchInvert(const Field& field, std::span<FieldElement> xs) {
  if (xs.empty()) return;
  std::vector<FieldElement> prefix(xs.size());
  FieldElement acc{1};
  for (std::size_t i = 0; i < xs.size(); ++i) {
    prefix[i] = acc;
    acc = field.Mul(acc, xs[i]);
  }
  FieldElement inv = field.Inv(acc);
  for (std::size_t i = xs.size(); i-- > 0;) {
    FieldElement original = xs[i];
    xs[i] = field.Mul(inv, prefix[i]);
    inv = field.Mul(inv, original);
  }
}

// Packing slots sit at the top of the field, far from party indices.
inline FieldElement EmbeddingPoint(const Field& field, std::uint32_t j) {
  return {static_cast<std::uint32_t>(field.modulus() - 1 - j)};
}

inline bool IsEmbeddingPoint(const Field& field, FieldElement x,
                             std::uint32_t pack_k) {
  return x.value >= field.modulus() - pack_k;
}

inline void Validate(const Field& field, const ShareParams& p) {
  if (p.t < 1 || p.pack_k < 1 || p.n < p.t + p.pack_k) {
    throw Error(ErrorCode::kInvalidParams,
                "need 1 <= t, 1 <= pack_k and t + pack_k <= n (t=" +
                    std::to_string(p.t) + ", pack_k=" +
                    std::to_string(p.pack_k) + ", n=" + std::to_string(p.n) +
                    ")");
  }
  // Randomness points occupy the t slots below the packing slots.
  if (std::uint64_t{p.n} + p.t + p.pack_k >= field.modulus()) {
    throw Error(ErrorCode::kInvalidParams, "field too small for n, t, pack_k");
  }
}

}  // namespace shamir_internal

// Lagrange basis values: result.at(i, b) = L_b(targets[i]) for the
// interpolation basis over `base` (distinct points).
inline FieldMatrix LagrangeCoefficients(const Field& field,
                                        std::span<const FieldElement> base,
                                        std::span<const FieldElement> targets) {
  const std::size_t m = base.size();
  // Barycentric weights w_b = 1 / prod_{c != b} (x_b - x_c).
  std::vector<FieldElement> weights(m, FieldElement{1});
  for (std::size_t b = 0; b < m; ++b) {
    for (std::size_t c = 0; c < m; ++c) {
      if (c != b) weights[b] = field.Mul(weights[b], field.Sub(base[b], base[c]));
    }
  }
  shamir_internal::BatchInvert(field, weights);

  FieldMatrix out(targets.size(), m);
  std::vector<FieldElement> diffs(m);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const FieldElement x = targets[i];
    auto hit = std::find(base.begin(), base.end(), x);
    if (hit != base.end()) {
      out.at(i, static_cast<std::size_t>(hit - base.begin())) = FieldElement{1};
      continue;
    }
    FieldElement ell{1};
    for (std::size_t b = 0; b < m; ++b) {
      diffs[b] = field.Sub(x, base[b]);
      ell = field.Mul(ell, diffs[b]);
    }
    shamir_internal::BatchInvert(field, diffs);
    for (std::size_t b = 0; b < m; ++b) {
      out.at(i, b) = field.Mul(ell, field.Mul(weights[b], diffs[b]));
    }
  }
  return out;
}

// Shares `secret` to the holders at `points` (distinct, nonzero, outside the
// packing slots). params.n must equal points.size().
inline std::vector<ShareArray> ShareAt(const Field& field,
                                            const FieldVector& secret,
                                            ShareParams params,
                                            std::span<const FieldElement> points,
                                            SeededRng& rng) {
  if (secret.empty()) throw Error(ErrorCode::kEmptySecret, "nothing to share");
  if (params.n != points.size()) {
    throw Error(ErrorCode::kInvalidParams, "params.n != number of points");
  }
  shamir_internal::Validate(field, params);
  params.secret_length = secret.size();
  {
    std::vector<FieldElement> sorted(points.begin(), points.end());
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw Error(ErrorCode::kDuplicatePoints, "holder points must be distinct");
    }
    for (FieldElement x : sorted) {
      if (x.value == 0 ||
          x.value >= field.modulus() - params.pack_k - params.t) {
        throw Error(ErrorCode::kInvalidParams,
                    "holder point collides with a reserved point");
      }
    }
  }

  const std::uint32_t k = params.pack_k;
  const std::uint32_t m = params.t + k;
  const std::size_t blocks = params.block_count();

  // Polynomial is pinned by its values at m base points: the k packing
  // slots carry secrets, the next t slots carry fresh randomness.
  std::vector<FieldElement> base(m);
  for (std::uint32_t j = 0; j < m; ++j) {
    base[j] = shamir_internal::EmbeddingPoint(field, j);
  }
  // values[b * blocks + beta] = value of block beta's polynomial at base[b].
  std::vector<std::uint32_t> values(std::size_t{m} * blocks, 0);
  for (std::size_t i = 0; i < secret.size(); ++i) {
    values[(i % k) * blocks + i / k] = secret[i].value;
  }
  for (std::size_t idx = std::size_t{k} * blocks; idx < values.size(); ++idx) {
    values[idx] = static_cast<std::uint32_t>(rng.UniformBelow(field.modulus()));
  }

  const FieldMatrix coeffs = LagrangeCoefficients(field, base, points);
  std::vector<ShareArray> shares;
  shares.reserve(points.size());
  std::vector<std::uint64_t> acc(blocks);
  field.Dispatch([&](const auto& ops) {
    for (std::size_t i = 0; i < points.size(); ++i) {
      std::fill(acc.begin(), acc.end(), 0);
      for (std::uint32_t b = 0; b < m; ++b) {
        const std::uint64_t c = coeffs.at(i, b).value;
        const std::uint32_t* row = values.data() + std::size_t{b} * blocks;
        for (std::size_t beta = 0; beta < blocks; ++beta) {
          acc[beta] += ops.MulPartial(c, row[beta]);
        }
      }
      FieldVector v(blocks);
      for (std::size_t beta = 0; beta < blocks; ++beta) {
        v[beta].value = static_cast<std::uint32_t>(ops.Reduce(acc[beta]));
      }
      shares.push_back(ShareArray{points[i], std::move(v), params});
    }
  });
  return shares;
}

// Shares to parties 1..params.n (party i evaluates at x = i).
inline std::vector<ShareArray> Share(const Field& field,
                                     const FieldVector& secret,
                                     const ShareParams& params,
                                     SeededRng& rng) {
  std::vector<FieldElement> points(params.n);
  for (std::uint32_t i = 0; i < params.n; ++i) points[i] = FieldElement{i + 1};
  return ShareAt(field, secret, params, points, rng);
}

inline FieldVector Reconstruct(const Field& field,
                               std::span<const ShareArray> shares) {
  if (shares.empty()) {
    throw Error(ErrorCode::kThresholdNotMet, "no shares");
  }
  const ShareParams& params = shares.front().params;
  for (const auto& s : shares) {
    if (s.params != params || s.values.size() != params.block_count()) {
      throw Error(ErrorCode::kInconsistentParams, "shares disagree on params");
    }
  }
  std::vector<FieldElement> points;
  points.reserve(shares.size());
  for (const auto& s : shares) points.push_back(s.owner_point);
  {
    std::vector<FieldElement> sorted = points;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw Error(ErrorCode::kDuplicatePoints, "two shares at one point");
    }
  }
  const std::uint32_t need = params.required_shares();
  if (shares.size() < need) {
    throw Error(ErrorCode::kThresholdNotMet,
                "have " + std::to_string(shares.size()) + " shares, need " +
                    std::to_string(need));
  }
  for (FieldElement x : points) {
    if (x.value == 0 || shamir_internal::IsEmbeddingPoint(field, x, params.pack_k)) {
      throw Error(ErrorCode::kInvalidParams, "share at a reserved point");
    }
  }

  const std::uint32_t k = params.pack_k;
  const std::size_t blocks = params.block_count();
  std::span<const FieldElement> used(points.data(), need);
  std::vector<FieldElement> targets(k);
  for (std::uint32_t j = 0; j < k; ++j) {
    targets[j] = shamir_internal::EmbeddingPoint(field, j);
  }
  const FieldMatrix coeffs = LagrangeCoefficients(field, used, targets);

  FieldVector out(params.secret_length);
  std::vector<std::uint64_t> acc(blocks);
  field.Dispatch([&](const auto& ops) {
    for (std::uint32_t j = 0; j < k; ++j) {
      std::fill(acc.begin(), acc.end(), 0);
      for (std::uint32_t s = 0; s < need; ++s) {
        const std::uint64_t c = coeffs.at(j, s).value;
        auto vals = shares[s].values.elements();
        for (std::size_t beta = 0; beta < blocks; ++beta) {
          acc[beta] += ops.MulPartial(c, vals[beta].value);
        }
      }
      for (std::size_t beta = 0; beta < blocks; ++beta) {
        const std::size_t idx = beta * k + j;
        if (idx < out.size()) {
          out[idx].value = static_cast<std::uint32_t>(ops.Reduce(acc[beta]));
        }
      }
    }
  });
  return out;
}

// Adds one party's shares of several secrets into its share of their sum.
inline ShareArray SumShares(const Field& field,
                            std::span<const ShareArray> shares) {
  if (shares.empty()) {
    throw Error(ErrorCode::kInvalidParams, "nothing to sum");
  }
  ShareArray out = shares.front();
  for (std::size_t i = 1; i < shares.size(); ++i) {
    const auto& s = shares[i];
    if (s.owner_point != out.owner_point) {
      throw Error(ErrorCode::kMixedOwnerPoints,
                  "shares belong to different holders");
    }
    if (s.params != out.params || s.values.size() != out.values.size()) {
      throw Error(ErrorCode::kInconsistentParams, "shares disagree on params");
    }
    AddInPlace(field, out.values, s.values);
  }
  return out;
}

}  // namespace secagg_sim
