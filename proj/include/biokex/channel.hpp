// Simulated public channel between one card and one server, with an
// adversary hook on every message. The driver is a synchronous
// turn-based loop (card, server, card); there is no timing model and no
// encryption layer, the adversary sees full plaintext.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "biokex/protocol.hpp"

namespace biokex {

class TranscriptError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Direction { CardToServer, ServerToCard };

std::string_view to_string(Direction dir);

using Payload = std::variant<AuthRequest, ServerChallenge, KeyConfirmation>;

struct WireMessage {
  std::uint64_t seq = 0;
  Direction dir = Direction::CardToServer;
  Payload payload;

  friend bool operator==(const WireMessage&, const WireMessage&) = default;
};

/// Ordered record of a session as the channel saw it: every message a
/// party emitted, in seq order, plus any adversary injections. A
/// replaced message appears as its sender emitted it; a dropped message
/// still appears (the adversary observed it before discarding).
struct Transcript {
  std::string session_label;
  std::vector<WireMessage> entries;

  const AuthRequest* first_request() const;
  const ServerChallenge* first_challenge() const;
  const KeyConfirmation* first_confirmation() const;
};

// Adversary verdict on an intercepted message.
struct Forward {};
struct Drop {};
/// Delivers this payload in place of the original; direction and seq of
/// the original are kept, so a replacement cannot change lanes.
struct Replace {
  Payload payload;
};
/// Extra messages delivered before the original is forwarded. Each gets
/// a fresh seq. A reply an endpoint produces to an injected message is
/// recorded in the transcript but not delivered anywhere.
struct Inject {
  Direction dir;
  Payload payload;
};
struct InjectThenForward {
  std::vector<Inject> messages;
};

using AdversaryAction = std::variant<Forward, Drop, Replace, InjectThenForward>;

/// Called once per intercepted message; an empty function forwards
/// everything.
using Adversary = std::function<AdversaryAction(const WireMessage&)>;

/// Everything the user side needs to drive a login.
struct CardCredentials {
  SmartCard card;
  Identity id;
  std::string password;
  Block biometric;
};

/// Final state of one driven session. A key is present exactly when the
/// matching phase is Established; Idle means the endpoint was never
/// reached.
struct SessionOutcome {
  std::optional<Block> card_key;
  std::optional<Block> server_key;
  SessionPhase card_phase = SessionPhase::Idle;
  SessionPhase server_phase = SessionPhase::Idle;
  Transcript transcript;
};

/// Drives the three-message exchange, routing each message through the
/// adversary. Rejections become phases in the outcome; adversarial
/// input never escapes as an exception. The rng serves the card first
/// (n1) and then the server (n2).
SessionOutcome run_honest_session(const CardCredentials& credentials,
                                  Server& server, const Adversary& adversary,
                                  Rng& rng,
                                  std::string session_label = "session");

/// Runs count adversary-free sessions back to back, fresh nonces each;
/// the raw material for the passive attacks. count must be >= 1.
std::vector<SessionOutcome> record_sessions(std::size_t count,
                                            const CardCredentials& credentials,
                                            Server& server, Rng& rng);

/// One JSON object per line, messages in seq order. Hex fields are 64
/// lowercase chars; the server identity travels as its UTF-8 label.
std::string transcript_to_jsonl(const Transcript& transcript);

/// Exact inverse of transcript_to_jsonl. Malformed lines raise
/// TranscriptError naming the 1-based line number; the label is not part
/// of the file and is supplied by the caller.
Transcript transcript_from_jsonl(std::string_view text, std::string session_label);

void save_transcript(const Transcript& transcript, const std::filesystem::path& path);
Transcript load_transcript(const std::filesystem::path& path);

}  // namespace biokex
