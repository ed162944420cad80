#include "biokex/protocol.hpp"

namespace biokex {

std::string_view to_string(SessionPhase phase) {
  switch (phase) {
    case SessionPhase::Idle: return "idle";
    case SessionPhase::AwaitingChallenge: return "awaiting_challenge";
    case SessionPhase::AwaitingConfirmation: return "awaiting_confirmation";
    case SessionPhase::Established: return "established";
    case SessionPhase::Failed: return "failed";
  }
  return "unknown";
}

Server RegistrationCenter::register_server(const Identity& sid) {
  if (!issued_servers_.insert(sid.label()).second)
    throw ProtocolError("server already registered: " + sid.label());
  return Server(sid, psk_);
}

SmartCard RegistrationCenter::register_user(const Identity& id, const Block& masked) {
  if (!issued_users_.insert(id.label()).second)
    throw ProtocolError("user already registered: " + id.label());
  Block a = hash(concat({id.block(), x_}));
  Block b = hash(a);
  return SmartCard{id, b, masked ^ b, psk_ ^ a};
}

Block RegistrationCenter::user_long_term_secret(const Identity& id) const {
  return hash(concat({id.block(), x_}));
}

Block user_compute_masked(std::string_view password, const Block& biometric) {
  return mask_password(password, biometric);
}

bool card_local_verify(const SmartCard& card, const Identity& id,
                       std::string_view password, const Block& biometric) {
  if (!(id == card.id)) return false;
  return card.b == (mask_password(password, biometric) ^ card.c);
}

std::pair<CardSession, AuthRequest> card_begin_login(const SmartCard& card,
                                                     const Identity& id,
                                                     std::string_view password,
                                                     const Block& biometric,
                                                     Rng& rng) {
  if (!card_local_verify(card, id, password, biometric))
    throw ProtocolError("login rejected: local verification failed");
  Block n1 = rng.next_block();
  Block aid = hash(n1) ^ id.block();
  AuthRequest request{
      aid,
      hash(card.b) ^ n1,
      hash(concat({n1, aid, card.d})),
      card.d,
  };
  return {CardSession(n1, request), request};
}

std::optional<std::pair<Block, KeyConfirmation>> CardSession::handle_challenge(
    const ServerChallenge& challenge) {
  if (phase_ != SessionPhase::AwaitingChallenge)
    throw std::logic_error("card session is not awaiting a challenge");
  Block n2 = challenge.m3 ^ hash2(n1_);
  if (hash(concat({challenge.sid.block(), n2})) != challenge.m4) {
    phase_ = SessionPhase::Failed;
    return std::nullopt;
  }
  Block key = hash(concat({n1_, n2}));
  phase_ = SessionPhase::Established;
  return std::make_pair(key, KeyConfirmation{key ^ hash(n2)});
}

std::optional<std::pair<SessionHandle, ServerChallenge>> Server::handle_request(
    const AuthRequest& request, Rng& rng) {
  Block a = request.d ^ psk_;
  Block b = hash(a);
  Block n1 = hash(b) ^ request.m1;
  if (hash(concat({n1, request.aid, request.d})) != request.m2)
    return std::nullopt;  // silent; no session is created
  auto recovered = Identity::from_block(request.aid ^ hash(n1));
  if (!recovered) return std::nullopt;  // claimed identity not decodable
  Block n2 = rng.next_block();
  Block key = hash(concat({n1, n2}));
  SessionHandle handle = next_handle_++;
  sessions_.emplace(handle, ServerSession{n1, n2, *recovered, key,
                                          SessionPhase::AwaitingConfirmation});
  return std::make_pair(handle, ServerChallenge{
                                    sid_,
                                    n2 ^ hash2(n1),
                                    hash(concat({sid_.block(), n2})),
                                });
}

std::optional<Block> Server::handle_confirmation(SessionHandle handle,
                                                 const KeyConfirmation& confirmation) {
  auto it = sessions_.find(handle);
  if (it == sessions_.end())
    throw std::logic_error("unknown session handle");
  ServerSession& session = it->second;
  if (session.phase != SessionPhase::AwaitingConfirmation)
    throw std::logic_error("session is not awaiting confirmation");
  if ((confirmation.m5 ^ session.key) != hash(session.n2)) {
    session.phase = SessionPhase::Failed;
    return std::nullopt;
  }
  session.phase = SessionPhase::Established;
  return session.key;
}

const ServerSession* Server::find_session(SessionHandle handle) const {
  auto it = sessions_.find(handle);
  return it == sessions_.end() ? nullptr : &it->second;
}

SmartCard card_change_password(const SmartCard& card, const Identity& id,
                               std::string_view password, const Block& biometric,
                               std::string_view new_password) {
  if (!card_local_verify(card, id, password, biometric))
    throw ProtocolError("password change rejected: local verification failed");
  SmartCard updated = card;
  updated.c = card.c ^ mask_password(password, biometric) ^
              mask_password(new_password, biometric);
  return updated;
}

}  // namespace biokex
