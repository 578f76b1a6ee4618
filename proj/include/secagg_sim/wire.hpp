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
#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "secagg_sim/errors.hpp"
#include "secagg_sim/field.hpp"
#include "secagg_sim/shamir.hpp"

namespace secagg_sim {

using Bytes = std::vector<std::uint8_t>;

// Little-endian binary encoding for protocol payloads. Every field vector
// costs a 4-byte length prefix plus 4 bytes per element (q < 2^32).
class ByteWriter {
 public:
  ByteWriter& U8(std::uint8_t v) {
    out_.push_back(v);
    return *this;
  }
  ByteWriter& U32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    return *this;
  }
  ByteWriter& U64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    return *this;
  }
  ByteWriter& Raw(std::span<const std::uint8_t> bytes) {
    out_.insert(out_.end(), bytes.begin(), bytes.end());
    return *this;
  }
  ByteWriter& Blob(std::span<const std::uint8_t> bytes) {
    U32(static_cast<std::uint32_t>(bytes.size()));
    return Raw(bytes);
  }
  ByteWriter& Vector(const FieldVector& v) {
    U32(static_cast<std::uint32_t>(v.size()));
    const std::size_t at = out_.size();
    out_.resize(at + 4 * v.size());
    static_assert(sizeof(FieldElement) == 4);
    static_assert(std::endian::native == std::endian::little);
    if (!v.empty()) {
      const auto* src = reinterpret_cast<const std::uint8_t*>(v.elements().data());
      std::copy(src, src + 4 * v.size(), out_.begin() + static_cast<std::ptrdiff_t>(at));
    }
    return *this;
  }
  ByteWriter& Share(const ShareArray& s) {
    U32(s.owner_point.value);
    U32(s.params.n).U32(s.params.t).U32(s.params.pack_k).U64(s.params.secret_length);
    return Vector(s.values);
  }

  std::size_t size() const { return out_.size(); }
  Bytes Take() { return std::move(out_); }

 private:
  Bytes out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t U8() {
    Need(1);
    return in_[pos_++];
  }
  std::uint32_t U32() {
    Need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{in_[pos_ + i]} << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t U64() {
    Need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{in_[pos_ + i]} << (8 * i);
    pos_ += 8;
    return v;
  }
  std::span<const std::uint8_t> Raw(std::size_t n) {
    Need(n);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  Bytes Blob() {
    const std::uint32_t n = U32();
    auto s = Raw(n);
    return Bytes(s.begin(), s.end());
  }
  FieldVector Vector(const Field& field) {
    const std::uint32_t n = U32();
    auto raw = Raw(std::size_t{n} * 4);
    FieldVector v(n);
    std::memcpy(v.elements().data(), raw.data(), raw.size());
    for (FieldElement e : v) {
      if (e.value >= field.modulus()) {
        throw Error(ErrorCode::kMalformedMessage, "non-canonical field element");
      }
    }
    return v;
  }
  ShareArray Share(const Field& field) {
    ShareArray s;
    s.owner_point = FieldElement{U32()};
    s.params.n = U32();
    s.params.t = U32();
    s.params.pack_k = U32();
    s.params.secret_length = U64();
    s.values = Vector(field);
    return s;
  }

  bool done() const { return pos_ == in_.size(); }
  void ExpectDone() const {
    if (!done()) throw Error(ErrorCode::kMalformedMessage, "trailing bytes");
  }

 private:
  void Need(std::size_t n) const {
    if (in_.size() - pos_ < n) {
      throw Error(ErrorCode::kMalformedMessage, "truncated payload");
    }
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace secagg_sim
