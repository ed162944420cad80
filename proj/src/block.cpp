#include "biokex/block.hpp"

#include <openssl/evp.h>

#include <stdexcept>

namespace biokex {

namespace {

// Zero-pads 1..32 bytes up to the fixed width.
std::array<std::uint8_t, Block::kSize> pad32(std::span<const std::uint8_t> data) {
  std::array<std::uint8_t, Block::kSize> out{};
  std::copy(data.begin(), data.end(), out.begin());
  return out;
}

int hex_nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  return -1;
}

}  // namespace

Block::Block(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != kSize)
    throw std::invalid_argument("Block requires exactly 32 bytes, got " +
                                std::to_string(bytes.size()));
  std::copy(bytes.begin(), bytes.end(), bytes_.begin());
}

std::optional<Block> Block::from_hex(std::string_view hex) {
  if (hex.size() != 2 * kSize) return std::nullopt;
  Block out;
  for (std::size_t i = 0; i < kSize; ++i) {
    int hi = hex_nibble(hex[2 * i]);
    int lo = hex_nibble(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    out.bytes_[i] = static_cast<std::uint8_t>(hi << 4 | lo);
  }
  return out;
}

std::string Block::to_hex() const {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(2 * kSize, '0');
  for (std::size_t i = 0; i < kSize; ++i) {
    out[2 * i] = digits[bytes_[i] >> 4];
    out[2 * i + 1] = digits[bytes_[i] & 0x0f];
  }
  return out;
}

bool Block::is_zero() const {
  for (auto b : bytes_)
    if (b != 0) return false;
  return true;
}

Block operator^(const Block& a, const Block& b) {
  Block out;
  for (std::size_t i = 0; i < Block::kSize; ++i)
    out.bytes_[i] = a.bytes_[i] ^ b.bytes_[i];
  return out;
}

Block& Block::operator^=(const Block& other) {
  for (std::size_t i = 0; i < kSize; ++i) bytes_[i] ^= other.bytes_[i];
  return *this;
}

Identity::Identity(std::string_view label) : label_(label) {
  if (label_.empty() || label_.size() > Block::kSize)
    throw std::invalid_argument("identity label must be 1..32 bytes");
  if (label_.back() == '\0')
    throw std::invalid_argument("identity label must not end with a zero byte");
  block_ = Block(pad32(std::span(reinterpret_cast<const std::uint8_t*>(label_.data()),
                                 label_.size())));
}

std::optional<Identity> Identity::from_block(const Block& block) {
  std::size_t len = Block::kSize;
  while (len > 0 && block.bytes()[len - 1] == 0) --len;
  if (len == 0) return std::nullopt;
  return Identity(std::string_view(reinterpret_cast<const char*>(block.bytes().data()), len));
}

Block hash(std::span<const std::uint8_t> data) {
  std::array<std::uint8_t, Block::kSize> digest;
  unsigned int digest_len = 0;
  // EVP_Digest dislikes a null pointer even with zero length.
  static const std::uint8_t empty = 0;
  const std::uint8_t* ptr = data.empty() ? &empty : data.data();
  if (EVP_Digest(ptr, data.size(), digest.data(), &digest_len, EVP_sha256(), nullptr) != 1 ||
      digest_len != Block::kSize)
    throw std::runtime_error("sha256 digest failed");
  return Block(digest);
}

Block hash(std::string_view data) {
  return hash(std::span(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

Block hash(const Block& block) { return hash(std::span(block.bytes())); }

Block hash2(std::span<const std::uint8_t> data) { return hash(hash(data)); }

Block hash2(const Block& block) { return hash(hash(block)); }

std::vector<std::uint8_t> concat(std::span<const Block> parts) {
  if (parts.empty()) throw std::invalid_argument("concat of zero blocks");
  std::vector<std::uint8_t> out;
  out.reserve(parts.size() * Block::kSize);
  for (const Block& part : parts)
    out.insert(out.end(), part.bytes().begin(), part.bytes().end());
  return out;
}

std::vector<std::uint8_t> concat(std::initializer_list<Block> parts) {
  return concat(std::span(parts.begin(), parts.size()));
}

Block mask_password(std::string_view password, const Block& biometric) {
  if (password.empty() || password.size() > Block::kSize)
    throw std::invalid_argument("password must be 1..32 bytes");
  Block padded(pad32(std::span(reinterpret_cast<const std::uint8_t*>(password.data()),
                               password.size())));
  return hash(padded ^ biometric);
}

Block Rng::next_block() {
  std::array<std::uint8_t, Block::kSize> bytes;
  for (std::size_t word = 0; word < 4; ++word) {
    std::uint64_t value = engine_();
    for (std::size_t i = 0; i < 8; ++i)
      bytes[8 * word + i] = static_cast<std::uint8_t>(value >> (8 * i));
  }
  return Block(bytes);
}

}  // namespace biokex
