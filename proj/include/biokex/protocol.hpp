// State machines for the three protocol roles: registration center,
// application server and smart card. The four phases (server/user
// registration, login, authentication, password change) are implemented
// equation-for-equation; verification failures are silent rejections,
// nothing is ever answered on the wire for a bad message.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string_view>
#include <utility>

#include "biokex/block.hpp"

namespace biokex {

/// Registration rejections, login and password-change failures.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Lifecycle of one login exchange, viewed from either side. Idle only
/// ever appears in outcome summaries (an endpoint that was never
/// engaged); transitions move strictly forward and nothing leaves
/// Established or Failed.
enum class SessionPhase {
  Idle,
  AwaitingChallenge,
  AwaitingConfirmation,
  Established,
  Failed,
};

std::string_view to_string(SessionPhase phase);

/// Card personalization tuple issued at user registration.
///   b = h^2(id || x)         (second preimage of the long-term secret)
///   c = h(pw xor bio) xor b  (password check value)
///   d = psk xor h(id || x)   (server-side unmasking handle, static per card)
struct SmartCard {
  Identity id;
  Block b;
  Block c;
  Block d;
};

/// First wire message, card to server. No semantic invariant: forgeries
/// must be representable, the server's checks are the only gate.
struct AuthRequest {
  Block aid;  // h(n1) xor id
  Block m1;   // h(b) xor n1
  Block m2;   // h(n1 || aid || d)
  Block d;

  friend bool operator==(const AuthRequest&, const AuthRequest&) = default;
};

/// Second wire message, server to card.
struct ServerChallenge {
  Identity sid;
  Block m3;  // n2 xor h^2(n1)
  Block m4;  // h(sid || n2)

  friend bool operator==(const ServerChallenge& a, const ServerChallenge& b) {
    return a.sid == b.sid && a.m3 == b.m3 && a.m4 == b.m4;
  }
};

/// Third wire message, card to server.
struct KeyConfirmation {
  Block m5;  // sk xor h(n2)

  friend bool operator==(const KeyConfirmation&, const KeyConfirmation&) = default;
};

/// Card-side state of one login attempt. Created by card_begin_login in
/// AwaitingChallenge; consumed exactly once by handle_challenge.
class CardSession {
 public:
  /// Recovers n2 from the challenge, checks m4 against h(sid || n2) and
  /// on success derives sk = h(n1 || n2) and the confirmation message.
  /// Rejection returns nullopt and moves the session to Failed. Calling
  /// on a session that is not awaiting a challenge is a state error
  /// (std::logic_error).
  std::optional<std::pair<Block, KeyConfirmation>> handle_challenge(
      const ServerChallenge& challenge);

  const Block& nonce() const { return n1_; }
  const AuthRequest& request() const { return request_; }
  SessionPhase phase() const { return phase_; }

 private:
  friend std::pair<CardSession, AuthRequest> card_begin_login(
      const SmartCard&, const Identity&, std::string_view, const Block&, Rng&);

  CardSession(Block n1, AuthRequest request)
      : n1_(n1), request_(std::move(request)) {}

  Block n1_;
  AuthRequest request_;
  SessionPhase phase_ = SessionPhase::AwaitingChallenge;
};

/// Server-side record of one login exchange. The key is fixed at
/// h(n1 || n2) the moment the session is created.
struct ServerSession {
  Block n1;
  Block n2;
  Identity recovered_id;
  Block key;
  SessionPhase phase;
};

using SessionHandle = std::uint64_t;

/// An authorized application server: holds the shared psk and its open
/// and finished sessions. Sessions that fail confirmation are kept for
/// inspection but never resumable.
class Server {
 public:
  Server(Identity sid, Block psk) : sid_(std::move(sid)), psk_(psk) {}

  /// Unmasks a = d xor psk, recomputes b = h(a), recovers n1 and the
  /// claimed identity, and checks m2. A mismatch rejects silently with
  /// no session created. On success draws n2, fixes the session key and
  /// returns the challenge plus a handle for correlating the
  /// confirmation.
  std::optional<std::pair<SessionHandle, ServerChallenge>> handle_request(
      const AuthRequest& request, Rng& rng);

  /// Checks m5 xor key == h(n2). Success returns the established key;
  /// mismatch rejects and the session moves to Failed. Unknown handles
  /// and sessions not awaiting confirmation are state errors.
  std::optional<Block> handle_confirmation(SessionHandle handle,
                                           const KeyConfirmation& confirmation);

  const ServerSession* find_session(SessionHandle handle) const;

  const Identity& sid() const { return sid_; }
  const Block& psk() const { return psk_; }

 private:
  Identity sid_;
  Block psk_;
  SessionHandle next_handle_ = 1;
  std::map<SessionHandle, ServerSession> sessions_;
};

/// Trusted issuer. Holds the master secret x and the single psk shared
/// by every authorized server; both are fixed for the center's lifetime.
class RegistrationCenter {
 public:
  RegistrationCenter(Block master_secret, Block psk)
      : x_(master_secret), psk_(psk) {}

  /// Out-of-band psk delivery; the transfer is not observable on the
  /// simulated channel. Re-registering a sid is an error.
  Server register_server(const Identity& sid);

  /// Issues the card tuple from the user's identity and masked password
  /// value. The center never sees the password or biometric themselves.
  SmartCard register_user(const Identity& id, const Block& masked);

  /// h(id || x), the user's long-term secret a. Exposed so compromise
  /// scenarios can model leaking it without also leaking x.
  Block user_long_term_secret(const Identity& id) const;

  const Block& master_secret() const { return x_; }
  const Block& psk() const { return psk_; }

 private:
  Block x_;
  Block psk_;
  std::set<std::string> issued_servers_;
  std::set<std::string> issued_users_;
};

/// h(pw xor bio), the registration request value computed on the user's
/// device. The password and biometric never leave the user.
Block user_compute_masked(std::string_view password, const Block& biometric);

/// True iff id matches the card and b == h(pw xor bio) xor c.
bool card_local_verify(const SmartCard& card, const Identity& id,
                       std::string_view password, const Block& biometric);

/// Draws n1 and builds the authentication request
///   m1 = h(b) xor n1, aid = h(n1) xor id, m2 = h(n1 || aid || d).
/// Local verification must pass first; otherwise throws ProtocolError
/// and no message is emitted.
std::pair<CardSession, AuthRequest> card_begin_login(const SmartCard& card,
                                                     const Identity& id,
                                                     std::string_view password,
                                                     const Block& biometric,
                                                     Rng& rng);

/// Local password change: c becomes c xor h(pw xor bio) xor h(pw' xor bio).
/// b and d are untouched; no server involvement. Verification failure
/// throws ProtocolError and leaves the card unchanged.
SmartCard card_change_password(const SmartCard& card, const Identity& id,
                               std::string_view password, const Block& biometric,
                               std::string_view new_password);

}  // namespace biokex
