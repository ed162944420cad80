// Executable demonstrations of the scheme's failures. Every attack is a
// deterministic function of its declared inputs and a seeded rng, and
// returns a report carrying enough raw material to re-verify each claim
// independently. Success is judged against reference keys taken from
// the honest endpoints, never re-derived through the attack's own math.

#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "biokex/channel.hpp"

namespace biokex {

/// Card contents as read out by the adversary. Physical extraction is
/// modeled as a verbatim copy; the card itself is untouched.
struct StolenCardData {
  Identity id;
  Block b;
  Block c;
  Block d;
};

StolenCardData extract_card(const SmartCard& card);

/// Structured evidence for one attack run. succeeded is the conjunction
/// of the named checks; recovered_keys and reference_keys align by
/// index.
struct AttackReport {
  std::string attack_name;
  bool succeeded = false;
  std::vector<Block> recovered_keys;
  std::vector<Block> reference_keys;
  std::vector<std::pair<std::string, bool>> acceptance_flags;
  std::string notes;

  void check(std::string name, bool passed);
  bool all_checks_passed() const;
};

/// Passive key recovery from stolen card contents plus recorded
/// traffic: n1 = m1 xor h(b), n2 = m3 xor h^2(n1), key = h(n1 || n2).
/// reference_keys[i] is the honest key of transcripts[i]; transcripts
/// missing either handshake message are skipped with a note.
AttackReport recover_session_keys(const StolenCardData& stolen,
                                  std::span<const Transcript> transcripts,
                                  std::span<const Block> reference_keys);

/// Full login as the card's owner using only the stolen contents. The
/// signature admits no password, biometric or psk; nothing else is
/// needed.
AttackReport impersonate_user(const StolenCardData& stolen, Server& server,
                              Rng& rng);

/// Answers a victim card's login with a forged challenge built from the
/// stolen b and an observed server identity; no psk involved. The card
/// establishes the key the adversary predicted. The forged m4 hashes
/// the adversary's own nonce, since that is the value the card recovers
/// in place of the server nonce.
AttackReport spoof_server(const StolenCardData& stolen, const Identity& sid,
                          const CardCredentials& victim, Rng& rng);

/// Sits on the channel between an honest card and an honest server,
/// re-randomizes the request toward the server and forges the challenge
/// toward the card. Both endpoints establish; the adversary holds both
/// keys and the two keys differ.
AttackReport run_mitm(const StolenCardData& stolen,
                      const CardCredentials& victim, Server& server, Rng& rng);

/// Recomputes a past session key from the user's long-term secret a and
/// the public transcript alone: b = h(a), then the passive recovery
/// chain. Works on traffic recorded arbitrarily long before a leaked.
AttackReport break_forward_secrecy(const Block& long_term_secret,
                                   const Transcript& transcript,
                                   const Block& reference_key);

}  // namespace biokex
