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
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "secagg_sim/errors.hpp"
#include "secagg_sim/random.hpp"

namespace secagg_sim {

// Circulant Harary graph H(n, k): vertex i is joined to i +- 1, ..., i +- k/2
// (mod n). Odd k is rounded up to the next even degree; k = n - 1 (or any
// degree that reaches it after rounding) gives the complete graph.
//
// With a seed, ring positions are a seeded permutation of the vertices:
// the same structure with randomly chosen neighbors.
class HararyTopology {
 public:
  HararyTopology(std::uint32_t n, std::uint32_t k,
                 std::optional<std::uint64_t> permutation_seed = std::nullopt)
      : n_(n), k_(k) {
    if (n < 2 || k < 1 || k >= n) {
      throw Error(ErrorCode::kInvalidDegree,
                  "need 1 <= k < n (k=" + std::to_string(k) +
                      ", n=" + std::to_string(n) + ")");
    }
    if (k_ % 2 == 1 && k_ < n_ - 1) ++k_;
    complete_ = k_ >= n_ - 1;
    if (complete_) k_ = n_ - 1;
    if (permutation_seed && !complete_) {
      ring_.resize(n_);
      for (std::uint32_t i = 0; i < n_; ++i) ring_[i] = i;
      SeededRng rng(*permutation_seed);
      rng.Shuffle(ring_.begin(), ring_.end());
      position_.resize(n_);
      for (std::uint32_t p = 0; p < n_; ++p) position_[ring_[p]] = p;
    }
  }

  std::uint32_t n() const { return n_; }
  // Effective degree after rounding.
  std::uint32_t degree() const { return k_; }
  bool complete() const { return complete_; }

  // Sorted neighbors of vertex v (0-based).
  std::vector<std::uint32_t> NeighborsOf(std::uint32_t v) const {
    std::vector<std::uint32_t> out;
    out.reserve(k_);
    if (complete_) {
      for (std::uint32_t u = 0; u < n_; ++u) {
        if (u != v) out.push_back(u);
      }
      return out;
    }
    const std::uint32_t pos = position_.empty() ? v : position_[v];
    for (std::uint32_t d = 1; d <= k_ / 2; ++d) {
      out.push_back(VertexAt((pos + d) % n_));
      out.push_back(VertexAt((pos + n_ - d) % n_));
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  bool Adjacent(std::uint32_t a, std::uint32_t b) const {
    if (a == b) return false;
    if (complete_) return true;
    const std::uint32_t pa = position_.empty() ? a : position_[a];
    const std::uint32_t pb = position_.empty() ? b : position_[b];
    const std::uint32_t diff = pa > pb ? pa - pb : pb - pa;
    return std::min(diff, n_ - diff) <= k_ / 2;
  }

 private:
  std::uint32_t VertexAt(std::uint32_t pos) const {
    return ring_.empty() ? pos : ring_[pos];
  }

  std::uint32_t n_;
  std::uint32_t k_;
  bool complete_ = false;
  std::vector<std::uint32_t> ring_;
  std::vector<std::uint32_t> position_;
};

struct HararyGraph {
  std::uint32_t n = 0;
  std::uint32_t k = 0;
  std::vector<std::vector<std::uint32_t>> adjacency;
};

inline HararyGraph Harary(std::uint32_t n, std::uint32_t k,
                          std::optional<std::uint64_t> permutation_seed = std::nullopt) {
  HararyTopology topo(n, k, permutation_seed);
  HararyGraph g{n, topo.degree(), {}};
  g.adjacency.reserve(n);
  for (std::uint32_t v = 0; v < n; ++v) g.adjacency.push_back(topo.NeighborsOf(v));
  return g;
}

}  // namespace secagg_sim
