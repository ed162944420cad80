// Scenario runner behind the command-line tool: provisions a world from
// a config (registration center, servers, cards), executes an honest
// run or one of the attacks, and emits a canonical JSON report. Equal
// configs always produce byte-identical reports.

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "biokex/attacks.hpp"

namespace biokex {

inline constexpr std::string_view kToolVersion = "0.1.0";

/// Invalid configuration or command usage; maps to exit status 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct UserSpec {
  std::string id;
  std::string pw;
  std::string bio_hex;
};

struct ServerSpec {
  std::string sid;
};

struct ScenarioConfig {
  std::uint64_t seed = 1;
  std::vector<UserSpec> users;
  std::vector<ServerSpec> servers;
  std::size_t sessions_to_record = 3;
  std::optional<std::string> output_path;

  /// Built-in single-user, single-server world used when no config file
  /// is given.
  static ScenarioConfig defaults();

  /// Throws ConfigError naming the offending field.
  static ScenarioConfig from_json(const nlohmann::json& doc);

  nlohmann::json to_json() const;

  /// Seed present by construction; requires at least one user and one
  /// server and a well-formed bio_hex per user.
  void validate() const;
};

/// Attack names accepted by run_attack, in dispatch order.
const std::vector<std::string>& attack_names();

struct RunReport {
  nlohmann::json document;
  /// Drives the exit status: true when the scenario concluded the way
  /// this scheme is expected to (honest run agrees, attack succeeds).
  bool expected_outcome = false;

  std::string canonical() const;
};

/// Provisions the world and runs one adversary-free session between the
/// first user and the first server. Writes the transcript when
/// output_path is set.
RunReport run_honest(const ScenarioConfig& config);

/// Provisions the world, records the corpus where the attack needs one,
/// executes the named attack and embeds its report. Unknown names raise
/// ConfigError listing the valid ones.
RunReport run_attack(std::string_view name, const ScenarioConfig& config);

nlohmann::json attack_report_to_json(const AttackReport& report);

}  // namespace biokex
