// Byte-level building blocks shared by every part of the toolkit: the
// fixed-width 32-byte value type, identity encoding, SHA-256 wrappers,
// XOR algebra and the seeded nonce generator.

#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace biokex {

/// Name of the digest every report pins; all 32-byte values in the
/// protocol live in this hash's output domain.
inline constexpr std::string_view kHashName = "sha256";

/// Opaque 32-byte value. Hashes, nonces, masks, keys and padded labels
/// all share this one width, which keeps XOR between any two protocol
/// fields well-typed.
class Block {
 public:
  static constexpr std::size_t kSize = 32;

  constexpr Block() : bytes_{} {}

  /// Throws std::invalid_argument unless exactly 32 bytes.
  explicit Block(std::span<const std::uint8_t> bytes);

  /// Parses 64 lowercase hex characters; nullopt on anything else.
  static std::optional<Block> from_hex(std::string_view hex);

  std::string to_hex() const;

  const std::array<std::uint8_t, kSize>& bytes() const { return bytes_; }
  bool is_zero() const;

  friend Block operator^(const Block& a, const Block& b);
  Block& operator^=(const Block& other);

  friend bool operator==(const Block&, const Block&) = default;
  friend auto operator<=>(const Block&, const Block&) = default;

 private:
  std::array<std::uint8_t, kSize> bytes_;
};

/// Party identifier: a 1..32 byte UTF-8 label plus its canonical block
/// encoding (label bytes, zero-padded to 32). Labels may not end with a
/// zero byte so that decoding, which strips trailing zeros, round-trips.
class Identity {
 public:
  /// Throws std::invalid_argument on an empty, oversized, or
  /// trailing-zero label.
  explicit Identity(std::string_view label);

  /// Inverse of the canonical encoding. nullopt for the all-zero block,
  /// which decodes to an empty label.
  static std::optional<Identity> from_block(const Block& block);

  const std::string& label() const { return label_; }
  const Block& block() const { return block_; }

  /// Two identities are equal iff their blocks are equal.
  friend bool operator==(const Identity& a, const Identity& b) {
    return a.block_ == b.block_;
  }

 private:
  std::string label_;
  Block block_;
};

/// SHA-256 of an arbitrary byte sequence (empty input allowed).
Block hash(std::span<const std::uint8_t> data);
Block hash(std::string_view data);
Block hash(const Block& block);

/// Iterated hash: hash applied to the 32 digest bytes of hash(data).
Block hash2(std::span<const std::uint8_t> data);
Block hash2(const Block& block);

/// Juxtaposes fixed-width parts in order; unambiguous without length
/// prefixes because every part is exactly 32 bytes. Throws
/// std::invalid_argument on an empty list.
std::vector<std::uint8_t> concat(std::span<const Block> parts);
std::vector<std::uint8_t> concat(std::initializer_list<Block> parts);

/// hash(pad(password) XOR biometric); the only value derived from the
/// password that ever leaves the user. Password must be 1..32 bytes.
Block mask_password(std::string_view password, const Block& biometric);

/// Deterministic nonce source. Every draw is a pure function of the
/// 64-bit seed, so any scenario replays bit-for-bit; no ambient entropy
/// is ever used. A block is 4 consecutive engine outputs, each
/// serialized little-endian.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  Block next_block();

 private:
  std::mt19937_64 engine_;
};

}  // namespace biokex
