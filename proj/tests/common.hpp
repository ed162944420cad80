// Shared fixtures for the test suites: a provisioned one-user,
// one-server world and a bit-flip helper for tamper checks.
#pragma once

#include <cstdlib>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "biokex/attacks.hpp"
#include "biokex/channel.hpp"

namespace testutil {

struct World {
  biokex::RegistrationCenter center;
  biokex::Server server;
  biokex::CardCredentials victim;
  biokex::Rng rng;
};

// Every secret is derived from the seed, so distinct seeds exercise
// distinct key material end to end.
inline World make_world(std::uint64_t seed) {
  biokex::Rng rng(seed);
  biokex::Block master_secret = rng.next_block();
  biokex::Block psk = rng.next_block();
  biokex::Block biometric = rng.next_block();
  biokex::RegistrationCenter center(master_secret, psk);
  biokex::Identity id("alice");
  biokex::Server server = center.register_server(biokex::Identity("server-1"));
  biokex::SmartCard card =
      center.register_user(id, biokex::user_compute_masked("hunter2", biometric));
  biokex::CardCredentials victim{card, id, "hunter2", biometric};
  return World{std::move(center), std::move(server), std::move(victim), rng};
}

// Flips one bit of a payload as it exists on the wire. The domain is
// every bit the wire format can carry: the block fields, plus (for the
// challenge) the bytes of the sid label itself — its zero padding is
// not transmitted, so only label bytes are flippable. A flip that would
// zero a label byte cannot be represented; the fixture sids avoid that.
inline biokex::Payload flip_bit(const biokex::Payload& payload, std::size_t bit) {
  using namespace biokex;
  auto flip = [](const Block& block, std::size_t local) {
    auto bytes = block.bytes();
    bytes[local / 8] ^= static_cast<std::uint8_t>(1u << (local % 8));
    return Block(bytes);
  };
  constexpr std::size_t kBlockBits = 8 * Block::kSize;
  if (const auto* req = std::get_if<AuthRequest>(&payload)) {
    AuthRequest out = *req;
    switch (bit / kBlockBits) {
      case 0: out.aid = flip(out.aid, bit % kBlockBits); break;
      case 1: out.m1 = flip(out.m1, bit % kBlockBits); break;
      case 2: out.m2 = flip(out.m2, bit % kBlockBits); break;
      default: out.d = flip(out.d, bit % kBlockBits); break;
    }
    return out;
  }
  if (const auto* ch = std::get_if<ServerChallenge>(&payload)) {
    std::size_t label_bits = ch->sid.label().size() * 8;
    if (bit < label_bits) {
      std::string label(ch->sid.label());
      label[bit / 8] = static_cast<char>(
          static_cast<unsigned char>(label[bit / 8]) ^ (1u << (bit % 8)));
      return ServerChallenge{Identity(label), ch->m3, ch->m4};
    }
    bit -= label_bits;
    if (bit < kBlockBits) return ServerChallenge{ch->sid, flip(ch->m3, bit), ch->m4};
    return ServerChallenge{ch->sid, ch->m3, flip(ch->m4, bit - kBlockBits)};
  }
  const auto& conf = std::get<KeyConfirmation>(payload);
  return KeyConfirmation{flip(conf.m5, bit % kBlockBits)};
}

inline std::size_t payload_bits(const biokex::Payload& payload) {
  using namespace biokex;
  constexpr std::size_t kBlockBits = 8 * Block::kSize;
  if (std::holds_alternative<AuthRequest>(payload)) return 4 * kBlockBits;
  if (const auto* ch = std::get_if<ServerChallenge>(&payload))
    return ch->sid.label().size() * 8 + 2 * kBlockBits;
  return kBlockBits;
}

inline std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() /
         ("biokex-test-" + std::to_string(::getpid()) + "-" + name);
}

}  // namespace testutil
