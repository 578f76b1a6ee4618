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

#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "secagg_sim/errors.hpp"
#include "secagg_sim/random.hpp"

namespace secagg_sim {

// Canonical representative of an element of F_q, always in [0, q).
struct FieldElement {
  std::uint32_t value = 0;

  friend auto operator<=>(FieldElement, FieldElement) = default;
};

namespace field_internal {

inline std::uint64_t PowMod(std::uint64_t base, std::uint64_t exp,
                            std::uint64_t mod) {
  std::uint64_t result = 1 % mod;
  base %= mod;
  while (exp > 0) {
    if (exp & 1) result = result * base % mod;
    base = base * base % mod;
    exp >>= 1;
  }
  return result;
}

// Deterministic Miller-Rabin; bases {2, 7, 61} are exact below 2^32.
inline bool IsPrime32(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t p : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL}) {
    if (n % p == 0) return n == p;
  }
  std::uint64_t d = n - 1;
  int r = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++r;
  }
  for (std::uint64_t a : {2ULL, 7ULL, 61ULL}) {
    if (a % n == 0) continue;
    std::uint64_t x = PowMod(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int i = 1; i < r; ++i) {
      x = x * x % n;
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

// Reduction strategies used by the vector kernels. MulPartial returns a
// value below 2^32 that is congruent to a*b, so up to 2^32 of them can be
// accumulated in a uint64_t before a single final Reduce.
struct Mersenne31Ops {
  static constexpr std::uint64_t kQ = (1ULL << 31) - 1;
  static std::uint64_t MulPartial(std::uint64_t a, std::uint64_t b) {
    const std::uint64_t p = a * b;
    return (p & kQ) + (p >> 31);
  }
  static std::uint64_t Reduce(std::uint64_t x) {
    x = (x & kQ) + (x >> 31);
    x = (x & kQ) + (x >> 31);
    return x >= kQ ? x - kQ : x;
  }
};

struct GenericOps {
  std::uint64_t q;
  std::uint64_t MulPartial(std::uint64_t a, std::uint64_t b) const {
    return a * b % q;
  }
  std::uint64_t Reduce(std::uint64_t x) const { return x % q; }
};

}  // namespace field_internal

// A prime field F_q with 2^16 <= q < 2^32. The default modulus is the
// Mersenne prime 2^31 - 1, which gets a shift-and-add reduction path.
class Field {
 public:
  static constexpr std::uint64_t kMersenne31 = (1ULL << 31) - 1;

  explicit Field(std::uint64_t q = kMersenne31) : q_(q) {
    if (q < (1ULL << 16) || q >= (1ULL << 32) || !field_internal::IsPrime32(q)) {
      throw Error(ErrorCode::kInvalidParams,
                  "field modulus must be a prime in [2^16, 2^32), got " +
                      std::to_string(q));
    }
  }

  // Test-only escape hatch for tiny fields (e.g. q = 257 in the chi-square
  // privacy checks). Still requires a prime.
  static Field UncheckedSmall(std::uint64_t q) {
    if (!field_internal::IsPrime32(q)) {
      throw Error(ErrorCode::kInvalidParams, "modulus is not prime");
    }
    Field f;
    f.q_ = q;
    return f;
  }

  std::uint64_t modulus() const { return q_; }
  bool is_mersenne31() const { return q_ == kMersenne31; }

  // Runs `fn` with the reduction strategy for this modulus so hot loops are
  // compiled once per strategy instead of branching per element.
  template <typename Fn>
  decltype(auto) Dispatch(Fn&& fn) const {
    if (is_mersenne31()) return fn(field_internal::Mersenne31Ops{});
    return fn(field_internal::GenericOps{q_});
  }

  FieldElement FromInt(std::int64_t v) const {
    std::int64_t r = v % static_cast<std::int64_t>(q_);
    if (r < 0) r += static_cast<std::int64_t>(q_);
    return {static_cast<std::uint32_t>(r)};
  }
  FieldElement FromU64(std::uint64_t v) const {
    return {static_cast<std::uint32_t>(v % q_)};
  }

  FieldElement Add(FieldElement a, FieldElement b) const {
    std::uint64_t s = std::uint64_t{a.value} + b.value;
    return {static_cast<std::uint32_t>(s >= q_ ? s - q_ : s)};
  }
  FieldElement Sub(FieldElement a, FieldElement b) const {
    std::uint64_t s = std::uint64_t{a.value} + q_ - b.value;
    return {static_cast<std::uint32_t>(s >= q_ ? s - q_ : s)};
  }
  FieldElement Neg(FieldElement a) const {
    return {static_cast<std::uint32_t>(a.value == 0 ? 0 : q_ - a.value)};
  }
  FieldElement Mul(FieldElement a, FieldElement b) const {
    return Dispatch([&](const auto& ops) {
      return FieldElement{static_cast<std::uint32_t>(
          ops.Reduce(ops.MulPartial(a.value, b.value)))};
    });
  }
  FieldElement Pow(FieldElement a, std::uint64_t e) const {
    return {static_cast<std::uint32_t>(field_internal::PowMod(a.value, e, q_))};
  }
  FieldElement Inv(FieldElement a) const {
    if (a.value == 0) throw Error(ErrorCode::kInversionOfZero, "inverse of 0");
    return Pow(a, q_ - 2);
  }

  friend bool operator==(const Field&, const Field&) = default;

 private:
  std::uint64_t q_;
};

// Fixed-length vector over F_q. Elements are kept canonical by every
// operation in this header; the length never changes after construction.
class FieldVector {
 public:
  FieldVector() = default;
  explicit FieldVector(std::size_t length) : elements_(length) {}
  explicit FieldVector(std::vector<FieldElement> elements)
      : elements_(std::move(elements)) {}

  static FieldVector FromValues(const Field& field,
                                std::span<const std::int64_t> values) {
    FieldVector out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      out.elements_[i] = field.FromInt(values[i]);
    }
    return out;
  }
  static FieldVector FromValues(const Field& field,
                                std::initializer_list<std::int64_t> values) {
    return FromValues(field, std::span<const std::int64_t>(values.begin(),
                                                           values.size()));
  }

  std::size_t size() const { return elements_.size(); }
  bool empty() const { return elements_.empty(); }

  FieldElement operator[](std::size_t i) const { return elements_[i]; }
  FieldElement& operator[](std::size_t i) { return elements_[i]; }

  std::span<const FieldElement> elements() const { return elements_; }
  std::span<FieldElement> elements() { return elements_; }

  auto begin() const { return elements_.begin(); }
  auto end() const { return elements_.end(); }

  friend bool operator==(const FieldVector&, const FieldVector&) = default;

 private:
  std::vector<FieldElement> elements_;
};

// Dense row-major matrix; only used where A is small enough to hold (tests
// and explicit fv_matvec callers). The LWE protocol streams A from a seed.
class FieldMatrix {
 public:
  FieldMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  FieldElement& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  FieldElement at(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }
  std::span<const FieldElement> row(std::size_t r) const {
    return std::span<const FieldElement>(data_).subspan(r * cols_, cols_);
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<FieldElement> data_;
};

namespace field_internal {

inline void CheckSameLength(const FieldVector& a, const FieldVector& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
}

}  // namespace field_internal

inline void AddInPlace(const Field& field, FieldVector& acc,
                       const FieldVector& b) {
  field_internal::CheckSameLength(acc, b);
  const std::uint64_t q = field.modulus();
  auto out = acc.elements();
  auto in = b.elements();
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t s = std::uint64_t{out[i].value} + in[i].value;
    out[i].value = static_cast<std::uint32_t>(s >= q ? s - q : s);
  }
}

inline void SubInPlace(const Field& field, FieldVector& acc,
                       const FieldVector& b) {
  field_internal::CheckSameLength(acc, b);
  const std::uint64_t q = field.modulus();
  auto out = acc.elements();
  auto in = b.elements();
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t s = std::uint64_t{out[i].value} + q - in[i].value;
    out[i].value = static_cast<std::uint32_t>(s >= q ? s - q : s);
  }
}

inline FieldVector Add(const Field& field, FieldVector a, const FieldVector& b) {
  AddInPlace(field, a, b);
  return a;
}

inline FieldVector Sub(const Field& field, FieldVector a, const FieldVector& b) {
  SubInPlace(field, a, b);
  return a;
}

// Sum of `vectors`; an empty list yields the zero vector of `length`.
inline FieldVector Sum(const Field& field, std::span<const FieldVector> vectors,
                       std::size_t length) {
  FieldVector acc(length);
  for (const auto& v : vectors) AddInPlace(field, acc, v);
  return acc;
}

inline FieldVector Scale(const Field& field, FieldVector v, FieldElement c) {
  for (auto& e : v.elements()) e = field.Mul(e, c);
  return v;
}

// Dot product of two equal-length spans with lazy reduction.
inline FieldElement Dot(const Field& field, std::span<const FieldElement> a,
                        std::span<const FieldElement> b) {
  return field.Dispatch([&](const auto& ops) {
    std::uint64_t acc = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      acc += ops.MulPartial(a[i].value, b[i].value);
    }
    return FieldElement{static_cast<std::uint32_t>(ops.Reduce(acc))};
  });
}

inline FieldVector MatVec(const Field& field, const FieldMatrix& a,
                          const FieldVector& s) {
  if (a.cols() != s.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "matrix has " + std::to_string(a.cols()) +
                    " columns, vector has " + std::to_string(s.size()));
  }
  FieldVector out(a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    out[r] = Dot(field, a.row(r), s.elements());
  }
  return out;
}

inline FieldVector RandomVector(const Field& field, std::size_t length,
                                SeededRng& rng) {
  FieldVector out(length);
  for (auto& e : out.elements()) {
    e.value = static_cast<std::uint32_t>(rng.UniformBelow(field.modulus()));
  }
  return out;
}

}  // namespace secagg_sim
