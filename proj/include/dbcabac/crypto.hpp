// Copyright 2026 The dbcabac Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace dbcabac::crypto {

constexpr std::size_t kHashSize = 32;
constexpr std::size_t kPublicKeySize = 32;
constexpr std::size_t kSecretKeySize = 64;
constexpr std::size_t kSignatureSize = 64;

using Hash = std::array<std::uint8_t, kHashSize>;
using PublicKey = std::array<std::uint8_t, kPublicKeySize>;
using SecretKey = std::array<std::uint8_t, kSecretKeySize>;
using Signature = std::array<std::uint8_t, kSignatureSize>;

// SHA-256.
Hash sha256(std::string_view data);
Hash sha256(std::span<const std::uint8_t> data);
std::string sha256_hex(std::string_view data);

std::string to_hex(std::span<const std::uint8_t> bytes);
std::string to_hex(std::string_view bytes);
// nullopt on odd length or non-hex characters.
std::optional<std::string> from_hex(std::string_view hex);

template <std::size_t N>
std::optional<std::array<std::uint8_t, N>> array_from_hex(std::string_view hex) {
  auto raw = from_hex(hex);
  if (!raw || raw->size() != N) return std::nullopt;
  std::array<std::uint8_t, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = static_cast<std::uint8_t>((*raw)[i]);
  return out;
}

// Ed25519 signing key.
struct KeyPair {
  PublicKey public_key{};
  SecretKey secret_key{};

  static KeyPair generate();
  // Deterministic key from a 32-byte seed (test fixtures, replay harnesses).
  static KeyPair from_seed(std::string_view seed_material);
};

Signature sign(const SecretKey& key, std::string_view message);
bool verify(const PublicKey& key, std::string_view message, const Signature& signature);

// `bytes` random bytes, hex-encoded.
std::string random_token(std::size_t bytes);
std::uint64_t random_u64();

}  // namespace dbcabac::crypto
