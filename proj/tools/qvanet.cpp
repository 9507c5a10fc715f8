#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qvanet/attack.hpp"
#include "qvanet/ledger.hpp"
#include "qvanet/netsim/simulation.hpp"
#include "qvanet/roadmap.hpp"
#include "qvanet/rsa.hpp"
#include "qvanet/shor.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw qvanet::netsim::ConfigError(path, "cannot open file");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw qvanet::netsim::ConfigError(path, e.what());
  }
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

int cmd_simulate(const std::string& scenario_path, const std::string& out_dir,
                 std::optional<std::uint64_t> seed_override,
                 const std::string& attack_plan_path) {
  qvanet::netsim::SimConfig cfg =
      qvanet::netsim::SimConfig::from_json(load_json_file(scenario_path));
  if (seed_override) cfg.seed = *seed_override;

  qvanet::netsim::Simulation sim(cfg);
  if (!attack_plan_path.empty()) {
    sim.set_attack_plan(qvanet::attack::AttackPlan::from_json(load_json_file(attack_plan_path)));
  }
  qvanet::netsim::RunResult result = sim.run();

  const std::filesystem::path dir(out_dir);
  std::filesystem::create_directories(dir);
  const auto events_path = dir / "events.jsonl";
  const auto trust_path = dir / "trust.csv";
  const auto chain_path = dir / "chain.json";
  const auto stats_path = dir / "stats.csv";
  const auto summary_path = dir / "summary.json";

  write_file(events_path, result.log.to_jsonl());
  write_file(trust_path, qvanet::netsim::trust_rows_to_csv(result.trust_rows));
  write_file(chain_path, result.chain.to_json().dump(2) + "\n");
  write_file(stats_path, qvanet::netsim::stats_to_csv(result.stats));

  result.summary["outputs"] = {{"events", events_path.string()},
                               {"trust", trust_path.string()},
                               {"chain", chain_path.string()},
                               {"stats", stats_path.string()},
                               {"summary", summary_path.string()}};
  write_file(summary_path, result.summary.dump(2) + "\n");

  std::cout << "scenario: " << scenario_path << "\n"
            << "seed: " << cfg.seed << "\n"
            << "events: " << result.log.events().size() << "\n"
            << "verdicts: " << result.summary["verdicts"].dump() << "\n"
            << "blocked: " << result.summary["blocked_vehicles"].dump() << "\n"
            << "chain length: " << result.chain.size() << "\n"
            << "final accumulated trust: " << result.accumulator.accumulated << "\n";
  if (result.summary["attack"].value("launched", false)) {
    std::cout << "attack succeeded: "
              << (result.summary["attack"].value("succeeded", false) ? "yes" : "no") << "\n";
  }
  std::cout << "outputs in " << dir.string() << std::endl;
  return kExitOk;
}

int cmd_factor(std::uint64_t n, std::uint64_t seed, unsigned attempts) {
  qvanet::shor::FactoringConfig cfg;
  cfg.modulus = n;
  cfg.seed = seed;
  cfg.max_attempts = attempts;
  const auto outcome = qvanet::shor::factor(n, cfg);
  std::cout << n << " = " << outcome.factors->first << " * " << outcome.factors->second << "\n"
            << qvanet::shor::to_json(outcome).dump(2) << std::endl;
  return kExitOk;
}

int cmd_keygen(std::uint64_t p, std::uint64_t q, std::uint64_t e) {
  const auto kp = e > 0 ? qvanet::crypto::keygen(p, q, e) : qvanet::crypto::keygen(p, q);
  std::cout << "N=" << kp.N << " phi=" << kp.phi << " e=" << kp.e << " d=" << kp.d << std::endl;
  return kExitOk;
}

int cmd_sign(std::uint64_t p, std::uint64_t q, std::uint64_t e, const std::string& message) {
  const auto kp = e > 0 ? qvanet::crypto::keygen(p, q, e) : qvanet::crypto::keygen(p, q);
  const auto sig = qvanet::crypto::sign(message, kp);
  std::cout << nlohmann::json(sig).dump() << std::endl;
  return kExitOk;
}

int cmd_verify(std::uint64_t e, std::uint64_t n, const std::string& message,
               const std::string& signature_json) {
  qvanet::crypto::SymbolSignature sig;
  try {
    sig = nlohmann::json::parse(signature_json).get<qvanet::crypto::SymbolSignature>();
  } catch (const nlohmann::json::exception& ex) {
    throw std::invalid_argument(std::string("signature must be a JSON integer array: ") +
                                ex.what());
  }
  const bool ok = qvanet::crypto::verify(message, sig, qvanet::crypto::PublicKey{e, n});
  std::cout << (ok ? "VALID" : "INVALID") << std::endl;
  return kExitOk;
}

// The whole pipeline against one key: factor N, invert e, sign the message.
int cmd_forge(std::uint64_t e, std::uint64_t n, const std::string& message, std::uint64_t seed,
              unsigned attempts) {
  qvanet::DetRng rng(seed);
  const auto [d, outcome] =
      qvanet::attack::forge_credentials(qvanet::crypto::PublicKey{e, n}, attempts, rng);
  const auto sig = qvanet::crypto::sign_with_exponent(message, d, n);
  std::cout << "factors: " << outcome.factors->first << " " << outcome.factors->second << "\n"
            << "derived d: " << d << "\n"
            << "signature: " << nlohmann::json(sig).dump() << std::endl;
  return kExitOk;
}

int cmd_roadmap(const std::string& data_path, std::uint64_t target_bits) {
  std::vector<qvanet::roadmap::RoadmapPoint> points;
  try {
    points = qvanet::roadmap::load_csv(data_path);
  } catch (const std::runtime_error& e) {
    throw qvanet::netsim::ConfigError(data_path, e.what());
  }
  const std::uint64_t target = qvanet::roadmap::qubits_required(target_bits);
  std::cout << "RSA-" << target_bits << " requires " << target << " qubits (2n + 3)\n";
  for (const auto model :
       {qvanet::roadmap::Model::Exponential, qvanet::roadmap::Model::Linear}) {
    const auto projection =
        qvanet::roadmap::project(points, model, static_cast<double>(target));
    std::cout << qvanet::roadmap::to_string(model) << " model: crossing year "
              << projection.predicted_year << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trust-chain VANET simulator with a quantum signature-forgery attack"};
  app.require_subcommand(1);

  auto* simulate = app.add_subcommand("simulate", "Run a scenario and emit its artifacts");
  std::string scenario_path, out_dir = "out", attack_plan_path;
  std::optional<std::uint64_t> seed_override;
  simulate->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
  simulate->add_option("--out", out_dir, "Output directory");
  simulate->add_option("--seed", seed_override, "Override the scenario seed");
  simulate->add_option("--attack", attack_plan_path, "Attack plan JSON file");

  auto* factor = app.add_subcommand("factor", "Factor a modulus with the order-finding circuit");
  std::uint64_t factor_n = 0, factor_seed = 0;
  unsigned factor_attempts = 20;
  factor->add_option("--n", factor_n, "Modulus to factor")->required();
  factor->add_option("--seed", factor_seed, "Measurement seed");
  factor->add_option("--attempts", factor_attempts, "Attempt budget");

  auto* keygen = app.add_subcommand("keygen", "Generate a small RSA keypair");
  std::uint64_t kg_p = 0, kg_q = 0, kg_e = 0;
  keygen->add_option("--p", kg_p, "First prime")->required();
  keygen->add_option("--q", kg_q, "Second prime")->required();
  keygen->add_option("--e", kg_e, "Public exponent (default: smallest valid)");

  auto* sign = app.add_subcommand("sign", "Sign a message");
  std::uint64_t sg_p = 0, sg_q = 0, sg_e = 0;
  std::string sg_message;
  sign->add_option("--p", sg_p, "First prime")->required();
  sign->add_option("--q", sg_q, "Second prime")->required();
  sign->add_option("--e", sg_e, "Public exponent (default: smallest valid)");
  sign->add_option("--message", sg_message, "Message to sign")->required();

  auto* verify = app.add_subcommand("verify", "Verify a signature");
  std::uint64_t vf_e = 0, vf_n = 0;
  std::string vf_message, vf_signature;
  verify->add_option("--e", vf_e, "Public exponent")->required();
  verify->add_option("--n", vf_n, "Modulus")->required();
  verify->add_option("--message", vf_message, "Message")->required();
  verify->add_option("--signature", vf_signature, "Signature as a JSON integer array")->required();

  auto* forge = app.add_subcommand("forge", "Derive the private exponent and sign as the victim");
  std::uint64_t fg_e = 0, fg_n = 0, fg_seed = 0;
  unsigned fg_attempts = 20;
  std::string fg_message;
  forge->add_option("--e", fg_e, "Victim public exponent")->required();
  forge->add_option("--n", fg_n, "Victim modulus")->required();
  forge->add_option("--message", fg_message, "Message to forge")->required();
  forge->add_option("--seed", fg_seed, "Measurement seed");
  forge->add_option("--attempts", fg_attempts, "Attempt budget");

  auto* roadmap = app.add_subcommand("roadmap", "Project the crossing year for a qubit budget");
  std::string rm_data;
  std::uint64_t rm_bits = 2048;
  roadmap->add_option("--data", rm_data, "CSV with header year,qubits")->required();
  roadmap->add_option("--target-bits", rm_bits, "RSA modulus bit length");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (simulate->parsed())
      return cmd_simulate(scenario_path, out_dir, seed_override, attack_plan_path);
    if (factor->parsed()) return cmd_factor(factor_n, factor_seed, factor_attempts);
    if (keygen->parsed()) return cmd_keygen(kg_p, kg_q, kg_e);
    if (sign->parsed()) return cmd_sign(sg_p, sg_q, sg_e, sg_message);
    if (verify->parsed()) return cmd_verify(vf_e, vf_n, vf_message, vf_signature);
    if (forge->parsed()) return cmd_forge(fg_e, fg_n, fg_message, fg_seed, fg_attempts);
    if (roadmap->parsed()) return cmd_roadmap(rm_data, rm_bits);
  } catch (const qvanet::netsim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return kExitConfig;
  } catch (const qvanet::shor::PrimeInputError& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitConfig;
  } catch (const qvanet::shor::AttemptsExhaustedError& e) {
    std::cerr << "error: " << e.what() << "\n"
              << qvanet::shor::to_json(e.outcome).dump(2) << std::endl;
    return kExitRuntime;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitRuntime;
  }
  return kExitConfig;
}
