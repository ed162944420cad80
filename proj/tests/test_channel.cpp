#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "biokex/channel.hpp"
#include "common.hpp"

using namespace biokex;

namespace {

// Matcher for TranscriptError messages without pinning exact wording.
template <class Fn>
void expect_transcript_error(Fn&& fn, const std::string& needle) {
  try {
    fn();
    FAIL("expected TranscriptError containing '" << needle << "'");
  } catch (const TranscriptError& e) {
    INFO("message: " << e.what());
    CHECK(std::string(e.what()).find(needle) != std::string::npos);
  }
}

}  // namespace

TEST_CASE("honest session establishes the same key on both ends") {
  auto w = testutil::make_world(11);
  SessionOutcome out = run_honest_session(w.victim, w.server, {}, w.rng, "unit");
  CHECK(out.card_phase == SessionPhase::Established);
  CHECK(out.server_phase == SessionPhase::Established);
  REQUIRE(out.card_key.has_value());
  REQUIRE(out.server_key.has_value());
  CHECK(*out.card_key == *out.server_key);

  const Transcript& t = out.transcript;
  CHECK(t.session_label == "unit");
  REQUIRE(t.entries.size() == 3);
  CHECK(t.entries[0].seq == 0);
  CHECK(t.entries[1].seq == 1);
  CHECK(t.entries[2].seq == 2);
  CHECK(t.entries[0].dir == Direction::CardToServer);
  CHECK(t.entries[1].dir == Direction::ServerToCard);
  CHECK(t.entries[2].dir == Direction::CardToServer);
  CHECK(std::holds_alternative<AuthRequest>(t.entries[0].payload));
  CHECK(std::holds_alternative<ServerChallenge>(t.entries[1].payload));
  CHECK(std::holds_alternative<KeyConfirmation>(t.entries[2].payload));
  CHECK(t.first_request() != nullptr);
  CHECK(t.first_challenge() != nullptr);
  CHECK(t.first_confirmation() != nullptr);
}

TEST_CASE("adversary observes every message as emitted") {
  auto w = testutil::make_world(12);
  std::vector<WireMessage> seen;
  Adversary observer = [&](const WireMessage& msg) -> AdversaryAction {
    seen.push_back(msg);
    return Forward{};
  };
  SessionOutcome out = run_honest_session(w.victim, w.server, observer, w.rng);
  CHECK(out.card_phase == SessionPhase::Established);
  REQUIRE(seen.size() == 3);
  CHECK(seen[0] == out.transcript.entries[0]);
  CHECK(seen[1] == out.transcript.entries[1]);
  CHECK(seen[2] == out.transcript.entries[2]);
}

TEST_CASE("dropping the request stalls both sides") {
  auto w = testutil::make_world(13);
  Adversary drop_first = [](const WireMessage& msg) -> AdversaryAction {
    if (msg.seq == 0) return Drop{};
    return Forward{};
  };
  SessionOutcome out = run_honest_session(w.victim, w.server, drop_first, w.rng);
  // The drop happens after the channel saw the message.
  CHECK(out.transcript.entries.size() == 1);
  CHECK(out.card_phase == SessionPhase::AwaitingChallenge);
  CHECK(out.server_phase == SessionPhase::Idle);
  CHECK_FALSE(out.card_key.has_value());
  CHECK_FALSE(out.server_key.has_value());
}

TEST_CASE("dropping the challenge leaves the server waiting") {
  auto w = testutil::make_world(14);
  Adversary drop = [](const WireMessage& msg) -> AdversaryAction {
    if (std::holds_alternative<ServerChallenge>(msg.payload)) return Drop{};
    return Forward{};
  };
  SessionOutcome out = run_honest_session(w.victim, w.server, drop, w.rng);
  CHECK(out.transcript.entries.size() == 2);
  CHECK(out.card_phase == SessionPhase::AwaitingChallenge);
  CHECK(out.server_phase == SessionPhase::AwaitingConfirmation);
}

TEST_CASE("dropping the confirmation strands only the server") {
  auto w = testutil::make_world(15);
  Adversary drop = [](const WireMessage& msg) -> AdversaryAction {
    if (std::holds_alternative<KeyConfirmation>(msg.payload)) return Drop{};
    return Forward{};
  };
  SessionOutcome out = run_honest_session(w.victim, w.server, drop, w.rng);
  CHECK(out.transcript.entries.size() == 3);
  CHECK(out.card_phase == SessionPhase::Established);
  CHECK(out.server_phase == SessionPhase::AwaitingConfirmation);
  CHECK(out.card_key.has_value());
  CHECK_FALSE(out.server_key.has_value());
}

TEST_CASE("tampering any message fails the receiving side") {
  for (std::size_t msg_index = 0; msg_index < 3; ++msg_index) {
    auto w = testutil::make_world(100 + msg_index);
    Adversary tamper = [&](const WireMessage& msg) -> AdversaryAction {
      if (msg.seq != msg_index) return Forward{};
      return Replace{testutil::flip_bit(msg.payload, 17)};
    };
    SessionOutcome out = run_honest_session(w.victim, w.server, tamper, w.rng);
    CAPTURE(msg_index);
    switch (msg_index) {
      case 0:
        CHECK(out.server_phase == SessionPhase::Failed);
        CHECK(out.card_phase == SessionPhase::AwaitingChallenge);
        CHECK(out.transcript.entries.size() == 1);
        break;
      case 1:
        CHECK(out.card_phase == SessionPhase::Failed);
        CHECK(out.server_phase == SessionPhase::AwaitingConfirmation);
        CHECK(out.transcript.entries.size() == 2);
        break;
      default:
        CHECK(out.card_phase == SessionPhase::Established);
        CHECK(out.server_phase == SessionPhase::Failed);
        CHECK(out.transcript.entries.size() == 3);
        break;
    }
    CHECK_FALSE(out.server_key.has_value());
  }
}

TEST_CASE("transcript keeps the emitted message, not the replacement") {
  auto w = testutil::make_world(16);
  std::optional<Payload> original;
  Adversary tamper = [&](const WireMessage& msg) -> AdversaryAction {
    if (msg.seq != 0) return Forward{};
    original = msg.payload;
    return Replace{testutil::flip_bit(msg.payload, 3)};
  };
  SessionOutcome out = run_honest_session(w.victim, w.server, tamper, w.rng);
  REQUIRE(original.has_value());
  REQUIRE(out.transcript.entries.size() == 1);
  CHECK(out.transcript.entries[0].payload == *original);
}

TEST_CASE("a replacement of the wrong kind is ignored, not fatal") {
  auto w = testutil::make_world(17);
  Adversary cross = [](const WireMessage& msg) -> AdversaryAction {
    if (std::holds_alternative<ServerChallenge>(msg.payload))
      return Replace{Payload(KeyConfirmation{Block{}})};
    return Forward{};
  };
  SessionOutcome out = run_honest_session(w.victim, w.server, cross, w.rng);
  CHECK(out.card_phase == SessionPhase::AwaitingChallenge);
  CHECK(out.server_phase == SessionPhase::AwaitingConfirmation);
}

TEST_CASE("injected replay reaches the server; the reply is contained") {
  auto w = testutil::make_world(18);
  Adversary replayer = [](const WireMessage& msg) -> AdversaryAction {
    if (msg.seq != 0) return Forward{};
    // Replay the request once before letting the original through.
    return InjectThenForward{{Inject{Direction::CardToServer, msg.payload}}};
  };
  SessionOutcome out = run_honest_session(w.victim, w.server, replayer, w.rng);

  // No replay protection: the server answered the duplicate too.
  const Transcript& t = out.transcript;
  REQUIRE(t.entries.size() == 5);
  CHECK(t.entries[0].payload == t.entries[1].payload);  // emission, then replay
  CHECK(std::holds_alternative<ServerChallenge>(t.entries[2].payload));
  CHECK(t.entries[2].dir == Direction::ServerToCard);
  for (std::size_t i = 0; i < 5; ++i) CHECK(t.entries[i].seq == i);

  // The reply to the injection was recorded but never delivered: the
  // canonical exchange still completed on its own challenge.
  CHECK(out.card_phase == SessionPhase::Established);
  CHECK(out.server_phase == SessionPhase::Established);
  const ServerSession* duplicate = w.server.find_session(1);
  const ServerSession* canonical = w.server.find_session(2);
  REQUIRE(duplicate != nullptr);
  REQUIRE(canonical != nullptr);
  CHECK(duplicate->phase == SessionPhase::AwaitingConfirmation);
  CHECK(canonical->phase == SessionPhase::Established);
  CHECK(out.card_key == canonical->key);
}

TEST_CASE("record_sessions yields distinct keys and stable labels") {
  auto w = testutil::make_world(19);
  auto outcomes = record_sessions(4, w.victim, w.server, w.rng);
  REQUIRE(outcomes.size() == 4);
  CHECK(outcomes[0].transcript.session_label == "session-0000");
  CHECK(outcomes[3].transcript.session_label == "session-0003");
  for (const auto& out : outcomes) {
    CHECK(out.card_phase == SessionPhase::Established);
    CHECK(out.server_phase == SessionPhase::Established);
    REQUIRE(out.card_key.has_value());
    CHECK(out.card_key == out.server_key);
  }
  for (std::size_t i = 0; i < outcomes.size(); ++i)
    for (std::size_t j = i + 1; j < outcomes.size(); ++j)
      CHECK(*outcomes[i].card_key != *outcomes[j].card_key);

  // d is static card state; every request carries the same value.
  for (const auto& out : outcomes) {
    const AuthRequest* request = out.transcript.first_request();
    REQUIRE(request != nullptr);
    CHECK(request->d == w.victim.card.d);
  }

  CHECK_THROWS_AS(record_sessions(0, w.victim, w.server, w.rng),
                  std::invalid_argument);
}

TEST_CASE("the forwarding channel is transparent") {
  // Same seed, once through the driver and once calling the parties
  // directly: identical keys and identical wire messages.
  auto direct = testutil::make_world(50);
  auto [session, request] =
      card_begin_login(direct.victim.card, direct.victim.id,
                       direct.victim.password, direct.victim.biometric, direct.rng);
  auto served = direct.server.handle_request(request, direct.rng);
  REQUIRE(served.has_value());
  auto confirmed = session.handle_challenge(served->second);
  REQUIRE(confirmed.has_value());
  auto key = direct.server.handle_confirmation(served->first, confirmed->second);
  REQUIRE(key.has_value());

  auto channeled = testutil::make_world(50);
  SessionOutcome out =
      run_honest_session(channeled.victim, channeled.server, {}, channeled.rng);
  REQUIRE(out.card_key.has_value());
  CHECK(*out.card_key == *key);
  REQUIRE(out.transcript.entries.size() == 3);
  CHECK(out.transcript.entries[0].payload == Payload(request));
  CHECK(out.transcript.entries[1].payload == Payload(served->second));
  CHECK(out.transcript.entries[2].payload == Payload(confirmed->second));
}

TEST_CASE("random replacements always terminate with a definite outcome") {
  std::mt19937_64 gen(0xfeedface);
  auto rand_block = [&] {
    std::array<std::uint8_t, Block::kSize> bytes;
    for (auto& b : bytes) b = static_cast<std::uint8_t>(gen());
    return Block(bytes);
  };
  auto rand_payload = [&]() -> Payload {
    switch (gen() % 3) {
      case 0:
        return AuthRequest{rand_block(), rand_block(), rand_block(), rand_block()};
      case 1: {
        std::string label;
        std::size_t len = 1 + gen() % 8;
        for (std::size_t i = 0; i < len; ++i)
          label += static_cast<char>('a' + gen() % 26);
        return ServerChallenge{Identity(label), rand_block(), rand_block()};
      }
      default:
        return KeyConfirmation{rand_block()};
    }
  };

  for (std::size_t iter = 0; iter < 64; ++iter) {
    auto w = testutil::make_world(7000 + iter);
    std::uint64_t target = gen() % 3;
    Adversary chaos = [&](const WireMessage& msg) -> AdversaryAction {
      if (msg.seq == target) return Replace{rand_payload()};
      return Forward{};
    };
    SessionOutcome out;
    REQUIRE_NOTHROW(out = run_honest_session(w.victim, w.server, chaos, w.rng));
    // Keys exist exactly on the established side, never elsewhere.
    CHECK(out.card_key.has_value() ==
          (out.card_phase == SessionPhase::Established));
    CHECK(out.server_key.has_value() ==
          (out.server_phase == SessionPhase::Established));
    // A random replacement can break at most the receiving side; it
    // can never conjure a shared key.
    if (out.card_key && out.server_key) CHECK(*out.card_key == *out.server_key);
  }
}

TEST_CASE("transcript survives a serialization round trip") {
  auto w = testutil::make_world(20);
  SessionOutcome out = run_honest_session(w.victim, w.server, {}, w.rng, "rt");
  std::string text = transcript_to_jsonl(out.transcript);
  Transcript parsed = transcript_from_jsonl(text, "rt");
  CHECK(parsed.session_label == "rt");
  CHECK(parsed.entries == out.transcript.entries);
  // Serialization is canonical: a second pass is byte-identical.
  CHECK(transcript_to_jsonl(parsed) == text);
}

TEST_CASE("transcript file round trip, label from the file stem") {
  auto w = testutil::make_world(21);
  SessionOutcome out = run_honest_session(w.victim, w.server, {}, w.rng);
  auto path = testutil::temp_path("roundtrip.jsonl");
  save_transcript(out.transcript, path);
  Transcript loaded = load_transcript(path);
  CHECK(loaded.session_label == path.stem().string());
  CHECK(loaded.entries == out.transcript.entries);
  std::filesystem::remove(path);

  CHECK_THROWS(load_transcript(testutil::temp_path("missing.jsonl")));
}

TEST_CASE("empty input parses to an empty transcript") {
  Transcript t = transcript_from_jsonl("", "empty");
  CHECK(t.entries.empty());
  CHECK(t.first_request() == nullptr);
  CHECK(t.first_challenge() == nullptr);
  CHECK(t.first_confirmation() == nullptr);
  // Blank lines are tolerated between records.
  auto w = testutil::make_world(22);
  SessionOutcome out = run_honest_session(w.victim, w.server, {}, w.rng);
  std::string text = transcript_to_jsonl(out.transcript);
  std::string spaced;
  for (char ch : text) {
    spaced += ch;
    if (ch == '\n') spaced += '\n';
  }
  CHECK(transcript_from_jsonl(spaced, "x").entries == out.transcript.entries);
}

TEST_CASE("parse errors name the offending line") {
  auto w = testutil::make_world(23);
  SessionOutcome out = run_honest_session(w.victim, w.server, {}, w.rng);
  std::string good = transcript_to_jsonl(out.transcript);

  expect_transcript_error([] { transcript_from_jsonl("not json", "x"); },
                          "line 1");
  expect_transcript_error(
      [&] { transcript_from_jsonl(good + "{\"seq\":99}\n", "x"); }, "line 4");
  expect_transcript_error(
      [&] { transcript_from_jsonl(good + good, "x"); }, "seq must strictly increase");

  // Field-level diagnostics.
  expect_transcript_error(
      [] {
        transcript_from_jsonl("{\"seq\":0,\"dir\":\"upward\",\"kind\":\"auth_request\"}\n", "x");
      },
      "dir");
  expect_transcript_error(
      [] {
        transcript_from_jsonl("{\"seq\":0,\"dir\":\"c2s\",\"kind\":\"greeting\"}\n", "x");
      },
      "kind");
  expect_transcript_error(
      [] {
        transcript_from_jsonl("{\"seq\":0,\"dir\":\"c2s\",\"kind\":\"key_confirmation\",\"m5\":\"zz\"}\n", "x");
      },
      "m5");
  std::string upper = "{\"seq\":0,\"dir\":\"c2s\",\"kind\":\"key_confirmation\",\"m5\":\"" +
                      std::string(64, 'A') + "\"}\n";
  expect_transcript_error([&] { transcript_from_jsonl(upper, "x"); }, "m5");
  expect_transcript_error(
      [] {
        transcript_from_jsonl("{\"seq\":0,\"dir\":\"s2c\",\"kind\":\"server_challenge\",\"sid_label\":\"\",\"m3\":\"00\",\"m4\":\"00\"}\n", "x");
      },
      "sid_label");
}
