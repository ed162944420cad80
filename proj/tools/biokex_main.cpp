// Command-line front end: `biokex honest` runs one clean session,
// `biokex attack <name>` reproduces one of the attack scenarios. Exit
// status: 0 scenario concluded as expected, 1 unexpected outcome,
// 2 usage error, 3 internal error.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "biokex/scenario.hpp"

namespace {

biokex::ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw biokex::ConfigError("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(buffer.str());
  } catch (const nlohmann::json::exception& e) {
    throw biokex::ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return biokex::ScenarioConfig::from_json(doc);
}

void print_summary(const biokex::RunReport& report) {
  const auto& doc = report.document;
  if (doc.contains("attack")) {
    const auto& attack = doc["attack"];
    std::cout << attack["attack_name"].get<std::string>()
              << ": succeeded=" << (attack["succeeded"].get<bool>() ? "true" : "false")
              << "\n  " << attack["notes"].get<std::string>() << "\n";
    for (const auto& [flag, passed] : attack["acceptance_flags"].items())
      std::cout << "  " << flag << ": " << (passed.get<bool>() ? "pass" : "FAIL") << "\n";
  } else {
    const auto& outcome = doc["outcome"];
    std::cout << "honest: card=" << outcome["card_phase"].get<std::string>()
              << " server=" << outcome["server_phase"].get<std::string>()
              << " keys_equal="
              << (outcome["keys_equal"].get<bool>() ? "true" : "false") << "\n";
  }
  for (const auto& path : doc["transcript_files"])
    std::cout << "  transcript: " << path.get<std::string>() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"simulator and attack harness for a hash-based multi-server "
               "smart-card key agreement scheme"};
  app.fallthrough();
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_path;
  std::uint64_t record_count = 0;
  bool json_report = false;

  app.add_option("--config", config_path, "scenario config file (JSON)");
  auto* seed_opt = app.add_option("--seed", seed, "override the scenario seed");
  auto* out_opt = app.add_option("--out", out_path, "transcript output path");
  auto* record_opt =
      app.add_option("--record", record_count, "override sessions_to_record");
  app.add_flag("--json", json_report, "print the full report to stdout");

  auto* honest_cmd = app.add_subcommand("honest", "run one honest session");
  auto* attack_cmd = app.add_subcommand("attack", "run a named attack scenario");
  std::string attack_name;
  attack_cmd
      ->add_option("name", attack_name,
                   "one of: stolen-card, impersonate, spoof-server, mitm, "
                   "forward-secrecy")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    biokex::ScenarioConfig config = config_path.empty()
                                        ? biokex::ScenarioConfig::defaults()
                                        : load_config(config_path);
    if (seed_opt->count()) config.seed = seed;
    if (record_opt->count()) config.sessions_to_record = record_count;
    if (out_opt->count()) config.output_path = out_path;

    biokex::RunReport report = honest_cmd->parsed()
                                   ? biokex::run_honest(config)
                                   : biokex::run_attack(attack_name, config);
    if (json_report)
      std::cout << report.canonical();
    else
      print_summary(report);
    return report.expected_outcome ? 0 : 1;
  } catch (const biokex::ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
