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

#include <sodium.h>

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string_view>
#include <vector>

#include "secagg_sim/errors.hpp"
#include "secagg_sim/field.hpp"
#include "secagg_sim/random.hpp"

namespace secagg_sim {

using Bytes = std::vector<std::uint8_t>;
using Key32 = std::array<std::uint8_t, 32>;

namespace crypto_internal {

inline void EnsureSodium() {
  static const int rc = sodium_init();
  if (rc < 0) throw std::runtime_error("libsodium failed to initialize");
}

}  // namespace crypto_internal

// X25519 key pair. Generation is driven by the caller's seeded rng so whole
// simulations replay bit-for-bit.
struct KeyPair {
  Key32 private_key{};
  Key32 public_key{};
};

struct SharedSecret {
  Key32 bytes{};
  friend bool operator==(const SharedSecret&, const SharedSecret&) = default;
};

// Seed for a PRNG mask stream (personal seed b_u or pairwise seed s_uv).
struct MaskSeed {
  Key32 bytes{};
  friend bool operator==(const MaskSeed&, const MaskSeed&) = default;
};

inline KeyPair GenerateKeyPair(SeededRng& rng) {
  crypto_internal::EnsureSodium();
  KeyPair kp;
  kp.private_key = rng.Bytes<32>();
  crypto_scalarmult_base(kp.public_key.data(), kp.private_key.data());
  return kp;
}

inline Key32 PublicKeyOf(const Key32& private_key) {
  crypto_internal::EnsureSodium();
  Key32 pk{};
  crypto_scalarmult_base(pk.data(), private_key.data());
  return pk;
}

// agree(sk_a, pk_b) == agree(sk_b, pk_a). The raw curve point is hashed so
// the result is uniform key material.
inline SharedSecret Agree(const Key32& private_key,
                          std::span<const std::uint8_t> public_key) {
  crypto_internal::EnsureSodium();
  if (public_key.size() != crypto_scalarmult_BYTES) {
    throw Error(ErrorCode::kInvalidPublicKey,
                "expected 32 bytes, got " + std::to_string(public_key.size()));
  }
  std::array<std::uint8_t, crypto_scalarmult_BYTES> point{};
  if (crypto_scalarmult(point.data(), private_key.data(), public_key.data()) != 0) {
    throw Error(ErrorCode::kInvalidPublicKey, "low-order point");
  }
  SharedSecret out;
  crypto_generichash(out.bytes.data(), out.bytes.size(), point.data(),
                     point.size(), nullptr, 0);
  sodium_memzero(point.data(), point.size());
  return out;
}

// Domain-separated subkey, so one agreement can feed both the channel key
// and the pairwise mask seed.
inline Key32 DeriveSubkey(const Key32& key, std::string_view context) {
  crypto_internal::EnsureSodium();
  Key32 out{};
  crypto_generichash(out.data(), out.size(),
                     reinterpret_cast<const unsigned char*>(context.data()),
                     context.size(), key.data(), key.size());
  return out;
}

inline MaskSeed PairwiseMaskSeed(const SharedSecret& secret) {
  return MaskSeed{DeriveSubkey(secret.bytes, "secagg-sim/pairwise-mask")};
}

inline Key32 ChannelKey(const SharedSecret& secret) {
  return DeriveSubkey(secret.bytes, "secagg-sim/channel");
}

// Nonces are (round << 32) | message_index and must never repeat for a key.
inline std::uint64_t MakeNonce(std::uint32_t round, std::uint32_t index) {
  return (std::uint64_t{round} << 32) | index;
}

namespace crypto_internal {

inline std::array<std::uint8_t, crypto_aead_chacha20poly1305_ietf_NPUBBYTES>
NonceBytes(std::uint64_t counter) {
  std::array<std::uint8_t, crypto_aead_chacha20poly1305_ietf_NPUBBYTES> n{};
  for (int i = 0; i < 8; ++i) n[4 + i] = static_cast<std::uint8_t>(counter >> (8 * i));
  return n;
}

}  // namespace crypto_internal

inline constexpr std::size_t kCiphertextOverhead =
    crypto_aead_chacha20poly1305_ietf_ABYTES;

// ChaCha20-Poly1305 (IETF). Output is ciphertext || 16-byte tag.
inline Bytes Encrypt(const Key32& key, std::span<const std::uint8_t> plaintext,
                     std::uint64_t nonce_counter) {
  crypto_internal::EnsureSodium();
  const auto nonce = crypto_internal::NonceBytes(nonce_counter);
  Bytes out(plaintext.size() + kCiphertextOverhead);
  unsigned long long written = 0;
  crypto_aead_chacha20poly1305_ietf_encrypt(out.data(), &written,
                                            plaintext.data(), plaintext.size(),
                                            nullptr, 0, nullptr, nonce.data(),
                                            key.data());
  out.resize(written);
  return out;
}

inline Bytes Decrypt(const Key32& key, std::span<const std::uint8_t> ciphertext,
                     std::uint64_t nonce_counter) {
  crypto_internal::EnsureSodium();
  if (ciphertext.size() < kCiphertextOverhead) {
    throw Error(ErrorCode::kAuthFailure, "ciphertext shorter than tag");
  }
  const auto nonce = crypto_internal::NonceBytes(nonce_counter);
  Bytes out(ciphertext.size() - kCiphertextOverhead);
  unsigned long long written = 0;
  if (crypto_aead_chacha20poly1305_ietf_decrypt(
          out.data(), &written, nullptr, ciphertext.data(), ciphertext.size(),
          nullptr, 0, nonce.data(), key.data()) != 0) {
    throw Error(ErrorCode::kAuthFailure, "authentication failed");
  }
  out.resize(written);
  return out;
}

// Deterministic stream of uniform field elements keyed by a seed: ChaCha20
// keystream cut into 32-bit words, masked to the bit width of q, and
// rejection sampled so there is no modulo bias.
class MaskStream {
 public:
  MaskStream(const Field& field, const Key32& seed)
      : q_(field.modulus()),
        mask_(static_cast<std::uint32_t>(~std::uint64_t{0} >>
                                         std::countl_zero(field.modulus() - 1))),
        key_(seed) {
    crypto_internal::EnsureSodium();
  }

  FieldElement Next() {
    for (;;) {
      if (pos_ == buffer_.size()) Refill();
      std::uint32_t w;
      std::memcpy(&w, buffer_.data() + pos_, 4);
      pos_ += 4;
      w &= mask_;
      if (w < q_) return FieldElement{w};
    }
  }

  void Fill(std::span<FieldElement> out) {
    for (auto& e : out) e = Next();
  }

 private:
  static constexpr std::size_t kBlocksPerRefill = 64;

  void Refill() {
    static const std::array<std::uint8_t, crypto_stream_chacha20_ietf_NONCEBYTES>
        kZeroNonce{};
    std::fill(buffer_.begin(), buffer_.end(), 0);
    crypto_stream_chacha20_ietf_xor_ic(buffer_.data(), buffer_.data(),
                                       buffer_.size(), kZeroNonce.data(),
                                       block_counter_, key_.data());
    block_counter_ += kBlocksPerRefill;
    pos_ = 0;
  }

  std::uint64_t q_;
  std::uint32_t mask_;
  Key32 key_;
  std::uint32_t block_counter_ = 0;
  std::array<std::uint8_t, 64 * kBlocksPerRefill> buffer_{};
  std::size_t pos_ = buffer_.size();
};

inline FieldVector ExpandMask(const Field& field, const MaskSeed& seed,
                              std::size_t length) {
  FieldVector out(length);
  MaskStream stream(field, seed.bytes);
  stream.Fill(out.elements());
  return out;
}

// acc += sign * PRNG(seed), without materializing the mask.
inline void ApplyMask(const Field& field, FieldVector& acc, const MaskSeed& seed,
                      bool subtract) {
  MaskStream stream(field, seed.bytes);
  for (auto& e : acc.elements()) {
    const FieldElement m = stream.Next();
    e = subtract ? field.Sub(e, m) : field.Add(e, m);
  }
}

}  // namespace secagg_sim
