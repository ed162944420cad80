#include "biokex/scenario.hpp"

#include <algorithm>
#include <filesystem>
#include <set>

namespace biokex {

namespace {

// Fixed template for the built-in user; any 64-hex value works.
constexpr std::string_view kDefaultBioHex =
    "64878bd26a197f40727660eefae1d714bf14b3ea62058d19da781367064612f8";

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

void check_identity_label(const std::string& label, const std::string& field) {
  try {
    Identity probe(label);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(field + ": " + e.what());
  }
}

}  // namespace

ScenarioConfig ScenarioConfig::defaults() {
  ScenarioConfig config;
  config.seed = 1;
  config.users.push_back({"alice", "correct-horse", std::string(kDefaultBioHex)});
  config.servers.push_back({"server-1"});
  config.sessions_to_record = 3;
  return config;
}

ScenarioConfig ScenarioConfig::from_json(const nlohmann::json& doc) {
  require(doc.is_object(), "config must be a JSON object");
  ScenarioConfig config;
  config.users.clear();
  config.servers.clear();

  if (doc.contains("seed")) {
    require(doc["seed"].is_number_unsigned(), "seed: must be an unsigned integer");
    config.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("users")) {
    require(doc["users"].is_array(), "users: must be an array");
    for (const auto& entry : doc["users"]) {
      require(entry.is_object(), "users: entries must be objects");
      require(entry.contains("id") && entry["id"].is_string(), "users[].id: required string");
      require(entry.contains("pw") && entry["pw"].is_string(), "users[].pw: required string");
      require(entry.contains("bio_hex") && entry["bio_hex"].is_string(),
              "users[].bio_hex: required string");
      config.users.push_back({entry["id"].get<std::string>(),
                              entry["pw"].get<std::string>(),
                              entry["bio_hex"].get<std::string>()});
    }
  }
  if (doc.contains("servers")) {
    require(doc["servers"].is_array(), "servers: must be an array");
    for (const auto& entry : doc["servers"]) {
      require(entry.is_object() && entry.contains("sid") && entry["sid"].is_string(),
              "servers[].sid: required string");
      config.servers.push_back({entry["sid"].get<std::string>()});
    }
  }
  if (doc.contains("sessions_to_record")) {
    require(doc["sessions_to_record"].is_number_unsigned(),
            "sessions_to_record: must be an unsigned integer");
    config.sessions_to_record = doc["sessions_to_record"].get<std::size_t>();
  }
  if (doc.contains("output_path")) {
    require(doc["output_path"].is_string(), "output_path: must be a string");
    config.output_path = doc["output_path"].get<std::string>();
  }
  return config;
}

nlohmann::json ScenarioConfig::to_json() const {
  nlohmann::json doc;
  doc["seed"] = seed;
  doc["users"] = nlohmann::json::array();
  for (const auto& user : users)
    doc["users"].push_back({{"id", user.id}, {"pw", user.pw}, {"bio_hex", user.bio_hex}});
  doc["servers"] = nlohmann::json::array();
  for (const auto& server : servers)
    doc["servers"].push_back({{"sid", server.sid}});
  doc["sessions_to_record"] = sessions_to_record;
  if (output_path) doc["output_path"] = *output_path;
  return doc;
}

void ScenarioConfig::validate() const {
  require(!users.empty(), "users: at least one user required");
  require(!servers.empty(), "servers: at least one server required");
  std::set<std::string> seen;
  for (const auto& user : users) {
    check_identity_label(user.id, "users[].id");
    require(seen.insert(user.id).second, "users[].id: duplicate '" + user.id + "'");
    require(!user.pw.empty() && user.pw.size() <= Block::kSize,
            "users[].pw: must be 1..32 bytes");
    require(Block::from_hex(user.bio_hex).has_value(),
            "users[].bio_hex: must be 64 lowercase hex chars");
  }
  seen.clear();
  for (const auto& server : servers) {
    check_identity_label(server.sid, "servers[].sid");
    require(seen.insert(server.sid).second,
            "servers[].sid: duplicate '" + server.sid + "'");
  }
}

const std::vector<std::string>& attack_names() {
  static const std::vector<std::string> names = {
      "stolen-card", "impersonate", "spoof-server", "mitm", "forward-secrecy"};
  return names;
}

std::string RunReport::canonical() const { return document.dump(2) + "\n"; }

nlohmann::json attack_report_to_json(const AttackReport& report) {
  nlohmann::json doc;
  doc["attack_name"] = report.attack_name;
  doc["succeeded"] = report.succeeded;
  doc["recovered_keys"] = nlohmann::json::array();
  for (const Block& key : report.recovered_keys)
    doc["recovered_keys"].push_back(key.to_hex());
  doc["reference_keys"] = nlohmann::json::array();
  for (const Block& key : report.reference_keys)
    doc["reference_keys"].push_back(key.to_hex());
  doc["acceptance_flags"] = nlohmann::json::object();
  for (const auto& [name, passed] : report.acceptance_flags)
    doc["acceptance_flags"][name] = passed;
  doc["notes"] = report.notes;
  return doc;
}

namespace {

struct World {
  RegistrationCenter center;
  std::vector<Server> servers;
  std::vector<CardCredentials> users;
  Rng rng;
};

// Provisioning order is part of the determinism contract: master secret
// and psk first, then servers, then users, all in config order.
World provision(const ScenarioConfig& config) {
  config.validate();
  Rng rng(config.seed);
  Block master_secret = rng.next_block();
  Block psk = rng.next_block();
  RegistrationCenter center(master_secret, psk);

  std::vector<Server> servers;
  for (const auto& spec : config.servers)
    servers.push_back(center.register_server(Identity(spec.sid)));

  std::vector<CardCredentials> users;
  for (const auto& spec : config.users) {
    Identity id(spec.id);
    Block biometric = *Block::from_hex(spec.bio_hex);
    SmartCard card = center.register_user(id, user_compute_masked(spec.pw, biometric));
    users.push_back(CardCredentials{std::move(card), std::move(id), spec.pw, biometric});
  }
  return World{std::move(center), std::move(servers), std::move(users), rng};
}

nlohmann::json base_report(const ScenarioConfig& config, const std::string& command) {
  nlohmann::json doc;
  doc["schema_version"] = 1;
  doc["tool"] = "biokex";
  doc["tool_version"] = kToolVersion;
  doc["hash_name"] = kHashName;
  doc["seed"] = config.seed;
  doc["command"] = command;
  doc["scenario"] = config.to_json();
  doc["transcript_files"] = nlohmann::json::array();
  return doc;
}

// One transcript goes exactly to output_path; several get a -NNNN tag
// before the extension.
std::vector<std::string> write_transcripts(const std::vector<const Transcript*>& transcripts,
                                           const std::string& output_path) {
  std::vector<std::string> written;
  if (transcripts.size() == 1) {
    save_transcript(*transcripts.front(), output_path);
    written.push_back(output_path);
    return written;
  }
  std::filesystem::path base(output_path);
  for (std::size_t i = 0; i < transcripts.size(); ++i) {
    char tag[16];
    std::snprintf(tag, sizeof tag, "-%04zu", i);
    std::filesystem::path path = base.parent_path() /
        (base.stem().string() + tag + base.extension().string());
    save_transcript(*transcripts[i], path);
    written.push_back(path.string());
  }
  return written;
}

void attach_transcripts(nlohmann::json& doc, const ScenarioConfig& config,
                        const std::vector<const Transcript*>& transcripts) {
  if (!config.output_path || transcripts.empty()) return;
  for (const std::string& path : write_transcripts(transcripts, *config.output_path))
    doc["transcript_files"].push_back(path);
}

}  // namespace

RunReport run_honest(const ScenarioConfig& config) {
  World world = provision(config);
  SessionOutcome outcome = run_honest_session(world.users.front(), world.servers.front(),
                                              {}, world.rng, "honest");

  bool keys_equal = outcome.card_key && outcome.server_key &&
                    *outcome.card_key == *outcome.server_key;
  nlohmann::json doc = base_report(config, "honest");
  doc["outcome"] = {
      {"card_phase", to_string(outcome.card_phase)},
      {"server_phase", to_string(outcome.server_phase)},
      {"keys_equal", keys_equal},
  };
  if (keys_equal) doc["outcome"]["session_key"] = outcome.card_key->to_hex();
  attach_transcripts(doc, config, {&outcome.transcript});

  bool as_expected = keys_equal &&
                     outcome.card_phase == SessionPhase::Established &&
                     outcome.server_phase == SessionPhase::Established;
  return RunReport{std::move(doc), as_expected};
}

RunReport run_attack(std::string_view name, const ScenarioConfig& config) {
  const auto& names = attack_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    std::string message = "unknown attack '" + std::string(name) + "'; valid names:";
    for (const auto& known : names) message += " " + known;
    throw ConfigError(message);
  }

  World world = provision(config);
  CardCredentials& victim = world.users.front();
  Server& server = world.servers.front();
  StolenCardData stolen = extract_card(victim.card);

  nlohmann::json doc = base_report(config, "attack:" + std::string(name));
  AttackReport report;

  if (name == "stolen-card") {
    std::size_t count = std::max<std::size_t>(1, config.sessions_to_record);
    auto outcomes = record_sessions(count, victim, server, world.rng);
    std::vector<Transcript> transcripts;
    std::vector<Block> reference_keys;
    std::vector<const Transcript*> refs;
    for (const auto& outcome : outcomes) {
      transcripts.push_back(outcome.transcript);
      reference_keys.push_back(*outcome.card_key);
    }
    report = recover_session_keys(stolen, transcripts, reference_keys);
    for (const auto& transcript : transcripts) refs.push_back(&transcript);
    attach_transcripts(doc, config, refs);
  } else if (name == "impersonate") {
    report = impersonate_user(stolen, server, world.rng);
  } else if (name == "spoof-server") {
    report = spoof_server(stolen, server.sid(), victim, world.rng);
  } else if (name == "mitm") {
    report = run_mitm(stolen, victim, server, world.rng);
  } else {  // forward-secrecy
    // The corpus is recorded first; the long-term secret leaks only
    // afterwards, and the recovery still lands.
    std::size_t count = std::max<std::size_t>(1, config.sessions_to_record);
    auto outcomes = record_sessions(count, victim, server, world.rng);
    Block long_term = world.center.user_long_term_secret(victim.id);
    report = break_forward_secrecy(long_term, outcomes.front().transcript,
                                   *outcomes.front().card_key);
    doc["timeline"] = {"record_sessions", "leak_long_term_secret", "recover_key"};
    attach_transcripts(doc, config, {&outcomes.front().transcript});
  }

  doc["attack"] = attack_report_to_json(report);
  return RunReport{std::move(doc), report.succeeded};
}

}  // namespace biokex
