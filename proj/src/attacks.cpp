#include "biokex/attacks.hpp"

#include <algorithm>

namespace biokex {

StolenCardData extract_card(const SmartCard& card) {
  return StolenCardData{card.id, card.b, card.c, card.d};
}

void AttackReport::check(std::string name, bool passed) {
  acceptance_flags.emplace_back(std::move(name), passed);
}

bool AttackReport::all_checks_passed() const {
  return !acceptance_flags.empty() &&
         std::all_of(acceptance_flags.begin(), acceptance_flags.end(),
                     [](const auto& flag) { return flag.second; });
}

AttackReport recover_session_keys(const StolenCardData& stolen,
                                  std::span<const Transcript> transcripts,
                                  std::span<const Block> reference_keys) {
  AttackReport report;
  report.attack_name = "stolen_card_key_recovery";
  if (transcripts.size() != reference_keys.size())
    throw std::invalid_argument("one reference key per transcript required");

  if (transcripts.empty()) {
    report.notes = "no material";
    report.succeeded = false;
    return report;
  }

  Block hashed_b = hash(stolen.b);
  std::size_t skipped = 0;
  std::size_t matched = 0;
  for (std::size_t i = 0; i < transcripts.size(); ++i) {
    const AuthRequest* request = transcripts[i].first_request();
    const ServerChallenge* challenge = transcripts[i].first_challenge();
    if (!request || !challenge) {
      ++skipped;
      continue;
    }
    Block n1 = hashed_b ^ request->m1;
    Block n2 = challenge->m3 ^ hash2(n1);
    Block key = hash(concat({n1, n2}));
    if (key == reference_keys[i]) ++matched;
    report.recovered_keys.push_back(key);
    report.reference_keys.push_back(reference_keys[i]);
  }

  report.check("all_keys_match",
               !report.recovered_keys.empty() &&
                   matched == report.recovered_keys.size());
  report.notes = "matched " + std::to_string(matched) + "/" +
                 std::to_string(report.recovered_keys.size()) +
                 " recorded sessions";
  if (skipped)
    report.notes += "; skipped " + std::to_string(skipped) +
                    " transcripts missing handshake messages";
  report.succeeded = report.all_checks_passed();
  return report;
}

AttackReport impersonate_user(const StolenCardData& stolen, Server& server,
                              Rng& rng) {
  AttackReport report;
  report.attack_name = "user_impersonation";
  report.notes = "forged from card contents only; no password, biometric, or psk";

  // Re-run the login computation with an adversary nonce in place of n1.
  Block nonce = rng.next_block();
  Block aid = hash(nonce) ^ stolen.id.block();
  AuthRequest forged{
      aid,
      hash(stolen.b) ^ nonce,
      hash(concat({nonce, aid, stolen.d})),
      stolen.d,
  };

  auto response = server.handle_request(forged, rng);
  report.check("server_accepted_request", response.has_value());
  if (!response) {
    report.notes += "; failed at the server's request verification";
    return report;
  }
  auto [handle, challenge] = *response;

  // The challenge unmasks against the adversary nonce exactly as it
  // would against a real n1.
  Block n2 = challenge.m3 ^ hash2(nonce);
  Block key = hash(concat({nonce, n2}));
  auto server_key = server.handle_confirmation(handle, KeyConfirmation{key ^ hash(n2)});
  report.check("server_accepted_confirmation", server_key.has_value());
  if (!server_key) {
    report.notes += "; failed at the server's confirmation check";
    return report;
  }

  report.check("session_keys_match", *server_key == key);
  report.recovered_keys.push_back(key);
  report.reference_keys.push_back(*server_key);
  report.succeeded = report.all_checks_passed();
  return report;
}

AttackReport spoof_server(const StolenCardData& stolen, const Identity& sid,
                          const CardCredentials& victim, Rng& rng) {
  AttackReport report;
  report.attack_name = "server_spoofing";
  report.notes =
      "challenge forged from stolen b and an observed server identity; no psk. "
      "m4 hashes the adversary nonce, the value the card recovers as the "
      "server nonce";

  // The victim initiates honestly; the adversary intercepts the request.
  auto [card_session, request] =
      card_begin_login(victim.card, victim.id, victim.password,
                       victim.biometric, rng);

  Block n1 = request.m1 ^ hash(stolen.b);
  Block nonce = rng.next_block();
  ServerChallenge forged{
      sid,
      nonce ^ hash2(n1),
      hash(concat({sid.block(), nonce})),
  };

  auto result = card_session.handle_challenge(forged);
  report.check("card_accepted_challenge", result.has_value());
  if (!result) {
    report.notes += "; failed at the card's challenge verification";
    return report;
  }

  Block predicted = hash(concat({n1, nonce}));
  report.check("card_key_matches_prediction", result->first == predicted);
  report.recovered_keys.push_back(predicted);
  report.reference_keys.push_back(result->first);
  report.succeeded = report.all_checks_passed();
  return report;
}

AttackReport run_mitm(const StolenCardData& stolen,
                      const CardCredentials& victim, Server& server, Rng& rng) {
  AttackReport report;
  report.attack_name = "man_in_the_middle";
  report.notes =
      "independent keys negotiated with card and server; both held by the "
      "adversary";

  struct {
    std::optional<Block> n1;        // victim's nonce, recovered via stolen b
    std::optional<Block> nonce;     // adversary nonce, used on both legs
    std::optional<Block> n2;        // server's nonce, recovered from its challenge
    std::optional<Block> card_leg;  // h(n1 || nonce)
    std::optional<Block> server_leg;  // h(nonce || n2)
  } adv;

  Adversary handler = [&](const WireMessage& msg) -> AdversaryAction {
    if (const auto* request = std::get_if<AuthRequest>(&msg.payload)) {
      adv.n1 = request->m1 ^ hash(stolen.b);
      adv.nonce = rng.next_block();
      Block aid = hash(*adv.nonce) ^ stolen.id.block();
      return Replace{AuthRequest{
          aid,
          hash(stolen.b) ^ *adv.nonce,
          hash(concat({*adv.nonce, aid, stolen.d})),
          stolen.d,
      }};
    }
    if (const auto* challenge = std::get_if<ServerChallenge>(&msg.payload)) {
      if (!adv.nonce || !adv.n1) return Forward{};
      adv.n2 = challenge->m3 ^ hash2(*adv.nonce);
      adv.server_leg = hash(concat({*adv.nonce, *adv.n2}));
      adv.card_leg = hash(concat({*adv.n1, *adv.nonce}));
      return Replace{ServerChallenge{
          challenge->sid,
          *adv.nonce ^ hash2(*adv.n1),
          hash(concat({challenge->sid.block(), *adv.nonce})),
      }};
    }
    // The card's own confirmation is absorbed; the adversary completes
    // the server leg with its own key.
    if (!adv.server_leg || !adv.n2) return Forward{};
    return Replace{KeyConfirmation{*adv.server_leg ^ hash(*adv.n2)}};
  };

  SessionOutcome outcome =
      run_honest_session(victim, server, handler, rng, "mitm");

  report.check("card_established",
               outcome.card_phase == SessionPhase::Established);
  report.check("server_established",
               outcome.server_phase == SessionPhase::Established);
  report.check("card_key_matches_adversary",
               adv.card_leg && outcome.card_key &&
                   *outcome.card_key == *adv.card_leg);
  report.check("server_key_matches_adversary",
               adv.server_leg && outcome.server_key &&
                   *outcome.server_key == *adv.server_leg);
  report.check("leg_keys_differ",
               adv.card_leg && adv.server_leg && !(*adv.card_leg == *adv.server_leg));

  if (adv.card_leg && outcome.card_key) {
    report.recovered_keys.push_back(*adv.card_leg);
    report.reference_keys.push_back(*outcome.card_key);
  }
  if (adv.server_leg && outcome.server_key) {
    report.recovered_keys.push_back(*adv.server_leg);
    report.reference_keys.push_back(*outcome.server_key);
  }
  report.succeeded = report.all_checks_passed();
  return report;
}

AttackReport break_forward_secrecy(const Block& long_term_secret,
                                   const Transcript& transcript,
                                   const Block& reference_key) {
  AttackReport report;
  report.attack_name = "forward_secrecy_break";
  report.notes =
      "derived from the long-term secret and public messages only; no card "
      "contents, no psk";

  const AuthRequest* request = transcript.first_request();
  const ServerChallenge* challenge = transcript.first_challenge();
  if (!request || !challenge) {
    report.notes += "; transcript missing handshake messages";
    report.succeeded = false;
    return report;
  }

  Block b = hash(long_term_secret);
  Block n1 = request->m1 ^ hash(b);
  Block n2 = challenge->m3 ^ hash2(n1);
  Block key = hash(concat({n1, n2}));

  report.check("key_matches_reference", key == reference_key);
  report.recovered_keys.push_back(key);
  report.reference_keys.push_back(reference_key);
  report.succeeded = report.all_checks_passed();
  return report;
}

}  // namespace biokex
