#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

namespace {

namespace fs = std::filesystem;

struct CommandResult {
  int exit_code = -1;
  std::string output;
};

CommandResult run_cli(const std::string& args) {
  const std::string cmd = std::string(QVANET_CLI_PATH) + " " + args + " 2>&1";
  std::array<char, 4096> buf{};
  std::string output;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) throw std::runtime_error("popen failed");
  while (fgets(buf.data(), buf.size(), pipe)) output += buf.data();
  const int status = pclose(pipe);
  CommandResult r;
  r.exit_code = WEXITSTATUS(status);
  r.output = output;
  return r;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string scenario(const std::string& name) {
  return std::string(QVANET_SCENARIO_DIR) + "/" + name;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("qvanet_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST(CliFactor, FactorsAndReportsTrace) {
  const auto r = run_cli("factor --n 15 --seed 1");
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.output.find("15 = 3 * 5"), std::string::npos);
  EXPECT_NE(r.output.find("\"wall_time_s\""), std::string::npos);

  EXPECT_EQ(run_cli("factor --n 21 --seed 1 --attempts 200").output.find("21 = 3 * 7"), 0u);
}

TEST(CliFactor, PrimeInputIsConfigError) {
  const auto r = run_cli("factor --n 13");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.output.find("prime"), std::string::npos);
}

TEST(CliKeygen, PrintsExponents) {
  const auto r = run_cli("keygen --p 3 --q 5");
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.output.find("d=3"), std::string::npos);
  EXPECT_EQ(run_cli("keygen --p 4 --q 5").exit_code, 2);
}

TEST(CliSignVerify, RoundTripAndTamper) {
  const auto signed_out = run_cli("sign --p 3 --q 5 --message \"crash at km 4\"");
  ASSERT_EQ(signed_out.exit_code, 0);
  std::string sig = signed_out.output;
  sig.erase(sig.find_last_not_of(" \n\r") + 1);

  const auto ok = run_cli("verify --e 3 --n 15 --message \"crash at km 4\" --signature '" + sig + "'");
  EXPECT_EQ(ok.exit_code, 0);
  EXPECT_NE(ok.output.find("VALID"), std::string::npos);

  const auto bad = run_cli("verify --e 3 --n 15 --message \"crash at km 5\" --signature '" + sig + "'");
  EXPECT_EQ(bad.exit_code, 0);
  EXPECT_NE(bad.output.find("INVALID"), std::string::npos);
}

TEST(CliForge, ForgedSignatureVerifiesUnderVictimKey) {
  const auto forged = run_cli("forge --e 3 --n 15 --message \"crash at km 4\" --seed 5");
  ASSERT_EQ(forged.exit_code, 0);
  EXPECT_NE(forged.output.find("derived d: 3"), std::string::npos);

  const auto pos = forged.output.find("signature: ");
  ASSERT_NE(pos, std::string::npos);
  std::string sig = forged.output.substr(pos + 11);
  sig.erase(sig.find_last_not_of(" \n\r") + 1);

  const auto check = run_cli("verify --e 3 --n 15 --message \"crash at km 4\" --signature '" + sig + "'");
  EXPECT_NE(check.output.find("VALID"), std::string::npos);
}

TEST(CliRoadmap, ProjectsAndDiagnoses) {
  const auto r = run_cli("roadmap --data " + std::string(QVANET_DATA_DIR) +
                         "/ibm_roadmap.csv --target-bits 2048");
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.output.find("4099 qubits"), std::string::npos);
  EXPECT_NE(r.output.find("Exponential model"), std::string::npos);
  EXPECT_NE(r.output.find("Linear model"), std::string::npos);

  EXPECT_EQ(run_cli("roadmap --data /nonexistent.csv").exit_code, 2);
}

TEST(CliSimulate, EmitsAllArtifacts) {
  const auto dir = fresh_dir("artifacts");
  const auto r = run_cli("simulate --scenario " + scenario("honest_baseline.json") + " --out " +
                         dir.string());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  for (const auto* name : {"events.jsonl", "trust.csv", "chain.json", "stats.csv", "summary.json"}) {
    EXPECT_TRUE(fs::exists(dir / name)) << name;
  }

  const auto summary = nlohmann::json::parse(read_file(dir / "summary.json"));
  EXPECT_EQ(summary["verdicts"]["malicious"].get<int>(), 0);
  EXPECT_EQ(summary["final_accumulated_trust"].get<int>(), 150);  // 6 * (5 + 20)

  // summary totals reconcile with the event log
  std::istringstream events(read_file(dir / "events.jsonl"));
  std::string line;
  std::size_t lines = 0, sent = 0, received = 0;
  while (std::getline(events, line)) {
    ++lines;
    const auto ev = nlohmann::json::parse(line);
    if (ev["kind"] == "Sent") ++sent;
    if (ev["kind"] == "Received") ++received;
  }
  EXPECT_EQ(summary["totals"]["events"].get<std::size_t>(), lines);
  EXPECT_EQ(summary["totals"]["messages_sent"].get<std::size_t>(), sent);
  EXPECT_EQ(summary["totals"]["messages_received"].get<std::size_t>(), received);
}

TEST(CliSimulate, SeedOverrideIsByteStable) {
  const auto dir1 = fresh_dir("seed_a");
  const auto dir2 = fresh_dir("seed_b");
  ASSERT_EQ(run_cli("simulate --scenario " + scenario("honest_baseline.json") + " --seed 7 --out " +
                    dir1.string())
                .exit_code,
            0);
  ASSERT_EQ(run_cli("simulate --scenario " + scenario("honest_baseline.json") + " --seed 7 --out " +
                    dir2.string())
                .exit_code,
            0);
  EXPECT_EQ(read_file(dir1 / "events.jsonl"), read_file(dir2 / "events.jsonl"));
}

TEST(CliSimulate, AttackScenarioReportsSuccess) {
  const auto dir = fresh_dir("attack");
  const auto r = run_cli("simulate --scenario " + scenario("attack_fig8.json") + " --out " +
                         dir.string());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const auto summary = nlohmann::json::parse(read_file(dir / "summary.json"));
  EXPECT_TRUE(summary["attack"]["succeeded"].get<bool>());
  EXPECT_EQ(summary["blocked_vehicles"][0].get<std::string>(), "v3");
  EXPECT_NE(r.output.find("attack succeeded: yes"), std::string::npos);
}

TEST(CliSimulate, ExternalAttackPlanFlag) {
  const auto dir = fresh_dir("plan");
  const fs::path plan_path = fs::temp_directory_path() / "qvanet_cli_plan.json";
  const nlohmann::json plan{{"attacker_id", "v2"},
                            {"victim_id", "v3"},
                            {"trigger_time_s", 90.0},
                            {"false_payload", "crash at km 4"}};
  std::ofstream(plan_path) << plan.dump();

  const auto r = run_cli("simulate --scenario " + scenario("honest_baseline.json") + " --attack " +
                         plan_path.string() + " --out " + dir.string());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const auto summary = nlohmann::json::parse(read_file(dir / "summary.json"));
  EXPECT_TRUE(summary["attack"]["launched"].get<bool>());
}

TEST(CliSimulate, SchemaViolationNamesField) {
  const fs::path bad = fs::temp_directory_path() / "qvanet_cli_bad.json";
  std::ofstream(bad) << R"({"vehicles": [], "duration_s": 10})";
  const auto r = run_cli("simulate --scenario " + bad.string() + " --out /tmp/qvanet_cli_na");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.output.find("vehicles"), std::string::npos);
}

TEST(CliParse, UnknownFlagIsConfigError) {
  EXPECT_EQ(run_cli("factor --modulus 15").exit_code, 2);
  EXPECT_EQ(run_cli("").exit_code, 2);
}
