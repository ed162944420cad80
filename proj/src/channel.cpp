#include "biokex/channel.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace biokex {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

std::string_view to_string(Direction dir) {
  return dir == Direction::CardToServer ? "c2s" : "s2c";
}

const AuthRequest* Transcript::first_request() const {
  for (const auto& entry : entries)
    if (const auto* p = std::get_if<AuthRequest>(&entry.payload)) return p;
  return nullptr;
}

const ServerChallenge* Transcript::first_challenge() const {
  for (const auto& entry : entries)
    if (const auto* p = std::get_if<ServerChallenge>(&entry.payload)) return p;
  return nullptr;
}

const KeyConfirmation* Transcript::first_confirmation() const {
  for (const auto& entry : entries)
    if (const auto* p = std::get_if<KeyConfirmation>(&entry.payload)) return p;
  return nullptr;
}

SessionOutcome run_honest_session(const CardCredentials& credentials,
                                  Server& server, const Adversary& adversary,
                                  Rng& rng, std::string session_label) {
  SessionOutcome out;
  out.transcript.session_label = std::move(session_label);

  auto [card_session, request] =
      card_begin_login(credentials.card, credentials.id, credentials.password,
                       credentials.biometric, rng);

  std::uint64_t next_seq = 0;
  std::optional<SessionHandle> handle;  // server session of the canonical exchange
  bool request_rejected = false;

  // Applies a payload to whichever endpoint dir points at and returns
  // any reply. Kinds the receiver cannot use in its current state are
  // ignored, so adversarial scripts always terminate with an outcome.
  // adopt marks the canonical exchange; only it may bind the handle.
  auto deliver = [&](Direction dir, const Payload& payload,
                     bool adopt) -> std::optional<Payload> {
    if (dir == Direction::CardToServer) {
      if (const auto* req = std::get_if<AuthRequest>(&payload)) {
        auto res = server.handle_request(*req, rng);
        if (!res) {
          if (adopt) request_rejected = true;
          return std::nullopt;
        }
        if (adopt) handle = res->first;
        return Payload(res->second);
      }
      if (const auto* conf = std::get_if<KeyConfirmation>(&payload)) {
        if (!handle) return std::nullopt;
        const ServerSession* session = server.find_session(*handle);
        if (!session || session->phase != SessionPhase::AwaitingConfirmation)
          return std::nullopt;
        server.handle_confirmation(*handle, *conf);
        return std::nullopt;
      }
      return std::nullopt;
    }
    if (const auto* challenge = std::get_if<ServerChallenge>(&payload)) {
      if (card_session.phase() != SessionPhase::AwaitingChallenge)
        return std::nullopt;
      auto res = card_session.handle_challenge(*challenge);
      if (!res) return std::nullopt;
      out.card_key = res->first;
      return Payload(res->second);
    }
    return std::nullopt;
  };

  // Records the emitted message, consults the adversary, and yields the
  // payload that actually crosses (nullopt when dropped). Injections
  // are delivered here; a reply to an injected message is recorded but
  // goes nowhere.
  auto route = [&](Direction dir, const Payload& payload) -> std::optional<Payload> {
    WireMessage msg{next_seq++, dir, payload};
    out.transcript.entries.push_back(msg);
    if (!adversary) return payload;
    AdversaryAction action = adversary(msg);
    return std::visit(
        overloaded{
            [&](const Forward&) -> std::optional<Payload> { return payload; },
            [&](const Drop&) -> std::optional<Payload> { return std::nullopt; },
            [&](const Replace& replace) -> std::optional<Payload> {
              return replace.payload;
            },
            [&](const InjectThenForward& inject) -> std::optional<Payload> {
              for (const Inject& extra : inject.messages) {
                out.transcript.entries.push_back(
                    {next_seq++, extra.dir, extra.payload});
                if (auto reply = deliver(extra.dir, extra.payload, false)) {
                  Direction back = extra.dir == Direction::CardToServer
                                       ? Direction::ServerToCard
                                       : Direction::CardToServer;
                  out.transcript.entries.push_back({next_seq++, back, *reply});
                }
              }
              return payload;
            },
        },
        action);
  };

  // Card -> server: authentication request.
  std::optional<Payload> challenge;
  if (auto delivered = route(Direction::CardToServer, Payload(request)))
    challenge = deliver(Direction::CardToServer, *delivered, true);

  // Server -> card: challenge.
  std::optional<Payload> confirmation;
  if (challenge)
    if (auto delivered = route(Direction::ServerToCard, *challenge))
      confirmation = deliver(Direction::ServerToCard, *delivered, true);

  // Card -> server: key confirmation.
  if (confirmation)
    if (auto delivered = route(Direction::CardToServer, *confirmation))
      deliver(Direction::CardToServer, *delivered, true);

  out.card_phase = card_session.phase();
  if (handle) {
    const ServerSession* session = server.find_session(*handle);
    out.server_phase = session->phase;
    if (session->phase == SessionPhase::Established) out.server_key = session->key;
  } else if (request_rejected) {
    out.server_phase = SessionPhase::Failed;
  }
  return out;
}

std::vector<SessionOutcome> record_sessions(std::size_t count,
                                            const CardCredentials& credentials,
                                            Server& server, Rng& rng) {
  if (count == 0)
    throw std::invalid_argument("record_sessions requires count >= 1");
  std::vector<SessionOutcome> outcomes;
  outcomes.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    char label[32];
    std::snprintf(label, sizeof label, "session-%04zu", i);
    outcomes.push_back(run_honest_session(credentials, server, {}, rng, label));
  }
  return outcomes;
}

namespace {

nlohmann::json message_to_json(const WireMessage& msg) {
  nlohmann::json line;
  line["seq"] = msg.seq;
  line["dir"] = to_string(msg.dir);
  std::visit(overloaded{
                 [&](const AuthRequest& r) {
                   line["kind"] = "auth_request";
                   line["aid"] = r.aid.to_hex();
                   line["m1"] = r.m1.to_hex();
                   line["m2"] = r.m2.to_hex();
                   line["d"] = r.d.to_hex();
                 },
                 [&](const ServerChallenge& c) {
                   line["kind"] = "server_challenge";
                   line["sid_label"] = c.sid.label();
                   line["m3"] = c.m3.to_hex();
                   line["m4"] = c.m4.to_hex();
                 },
                 [&](const KeyConfirmation& c) {
                   line["kind"] = "key_confirmation";
                   line["m5"] = c.m5.to_hex();
                 },
             },
             msg.payload);
  return line;
}

Block hex_field(const nlohmann::json& line, const char* name) {
  if (!line.contains(name) || !line[name].is_string())
    throw TranscriptError(std::string("missing hex field '") + name + "'");
  auto block = Block::from_hex(line[name].get<std::string>());
  if (!block)
    throw TranscriptError(std::string("field '") + name +
                          "' must be 64 lowercase hex chars");
  return *block;
}

WireMessage message_from_json(const nlohmann::json& line) {
  if (!line.is_object()) throw TranscriptError("expected a JSON object");
  if (!line.contains("seq") || !line["seq"].is_number_unsigned())
    throw TranscriptError("missing unsigned field 'seq'");
  if (!line.contains("dir") || !line["dir"].is_string())
    throw TranscriptError("missing string field 'dir'");
  if (!line.contains("kind") || !line["kind"].is_string())
    throw TranscriptError("missing string field 'kind'");

  WireMessage msg;
  msg.seq = line["seq"].get<std::uint64_t>();
  std::string dir = line["dir"].get<std::string>();
  if (dir == "c2s")
    msg.dir = Direction::CardToServer;
  else if (dir == "s2c")
    msg.dir = Direction::ServerToCard;
  else
    throw TranscriptError("field 'dir' must be \"c2s\" or \"s2c\"");

  std::string kind = line["kind"].get<std::string>();
  if (kind == "auth_request") {
    msg.payload = AuthRequest{hex_field(line, "aid"), hex_field(line, "m1"),
                              hex_field(line, "m2"), hex_field(line, "d")};
  } else if (kind == "server_challenge") {
    if (!line.contains("sid_label") || !line["sid_label"].is_string())
      throw TranscriptError("missing string field 'sid_label'");
    try {
      msg.payload = ServerChallenge{Identity(line["sid_label"].get<std::string>()),
                                    hex_field(line, "m3"), hex_field(line, "m4")};
    } catch (const std::invalid_argument& e) {
      throw TranscriptError(std::string("invalid sid_label: ") + e.what());
    }
  } else if (kind == "key_confirmation") {
    msg.payload = KeyConfirmation{hex_field(line, "m5")};
  } else {
    throw TranscriptError("unknown kind '" + kind + "'");
  }
  return msg;
}

}  // namespace

std::string transcript_to_jsonl(const Transcript& transcript) {
  std::string out;
  for (const WireMessage& msg : transcript.entries) {
    out += message_to_json(msg).dump();
    out += '\n';
  }
  return out;
}

Transcript transcript_from_jsonl(std::string_view text, std::string session_label) {
  Transcript transcript;
  transcript.session_label = std::move(session_label);
  std::size_t line_no = 0;
  std::size_t pos = 0;
  std::optional<std::uint64_t> prev_seq;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    try {
      auto parsed = nlohmann::json::parse(line);
      WireMessage msg = message_from_json(parsed);
      if (prev_seq && msg.seq <= *prev_seq)
        throw TranscriptError("seq must strictly increase");
      prev_seq = msg.seq;
      transcript.entries.push_back(std::move(msg));
    } catch (const nlohmann::json::exception& e) {
      throw TranscriptError("line " + std::to_string(line_no) +
                            ": malformed JSON: " + e.what());
    } catch (const TranscriptError& e) {
      throw TranscriptError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return transcript;
}

void save_transcript(const Transcript& transcript, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << transcript_to_jsonl(transcript);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Transcript load_transcript(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return transcript_from_jsonl(buffer.str(), path.stem().string());
}

}  // namespace biokex
