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

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "secagg_sim/protocols/baseline.hpp"
#include "secagg_sim/protocols/common.hpp"
#include "secagg_sim/protocols/harary.hpp"
#include "secagg_sim/protocols/masking.hpp"
#include "secagg_sim/protocols/secret_sharing.hpp"
#include "secagg_sim/protocols/stevens.hpp"

namespace secagg_sim {

// Protocol identifiers accepted by the harness and the CLI.
inline constexpr std::array<std::string_view, 6> kProtocolIds = {
    "baseline", "secret_sharing", "stevens", "stevens_packed", "bonawitz", "bell"};

inline bool IsKnownProtocol(std::string_view id) {
  for (auto k : kProtocolIds) {
    if (k == id) return true;
  }
  return false;
}

// `stevens` runs with one secret per sharing polynomial; `stevens_packed`
// keeps the configured packing factor.
inline ProtocolSetup MakeProtocol(std::string_view id, ProtocolConfig config,
                                  std::vector<FieldVector> inputs) {
  if (id == "baseline") return MakeBaseline(config, std::move(inputs));
  if (id == "secret_sharing") return MakeSecretSharing(config, std::move(inputs));
  if (id == "stevens") {
    config.pack_k = 1;
    return MakeStevens(config, std::move(inputs));
  }
  if (id == "stevens_packed") return MakeStevens(config, std::move(inputs));
  if (id == "bonawitz") return MakeBonawitz(config, std::move(inputs));
  if (id == "bell") return MakeBell(config, std::move(inputs));
  throw Error(ErrorCode::kInvalidParams, "unknown protocol '" + std::string(id) + "'");
}

}  // namespace secagg_sim
