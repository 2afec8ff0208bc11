#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "crossing/config.hpp"

using namespace crossing;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("crossing_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(CLI_BINARY_PATH) + " " + args + " >" + log.string() +
                          " 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

/// A micro run profile so CLI round trips stay fast.
void write_micro_config(const fs::path& path, std::uint64_t seed) {
  std::ofstream out(path);
  out << R"({
  "run": {"name": "micro", "seed": )"
      << seed << R"(},
  "network": {"h1": 8, "h2": 6, "h_ego": 5, "h3": 8, "recurrent": 6},
  "trainer": {"n_episodes": 8, "eval_interval": 4, "eval_episodes": 4,
              "updates_per_episode": 1, "batch_size": 4, "replay_capacity": 512}
})";
}

}  // namespace

TEST_SUITE("config_cli") {

TEST_CASE("defaults resolve and validate") {
  const RunConfig cfg = default_config();
  cfg.validate();
  CHECK(cfg.sim.n_other_vehicles == 4);
  CHECK(cfg.trainer.n_episodes == 30000);
  CHECK(cfg.network.use_lstm);
}

TEST_CASE("json round trip preserves the configuration") {
  RunConfig cfg = default_config();
  cfg.seed = 987654321;
  cfg.trainer.gamma = 0.9;
  cfg.network.h3 = 48;
  const RunConfig back = config_from_json(to_json(cfg));
  CHECK(to_json(back).dump() == to_json(cfg).dump());
  CHECK(config_hash(back) == config_hash(cfg));
}

TEST_CASE("unknown keys are hard errors naming the key") {
  nlohmann::json j = to_json(default_config());
  j["trainer"]["batchsize"] = 16;
  try {
    (void)config_from_json(j);
    FAIL("expected an error");
  } catch (const std::invalid_argument& err) {
    CHECK(std::string(err.what()).find("trainer.batchsize") != std::string::npos);
  }

  nlohmann::json top = {{"simulation", nlohmann::json::object()}};
  CHECK_THROWS_AS((void)config_from_json(top), std::invalid_argument);
}

TEST_CASE("overrides reach nested keys and reject junk") {
  RunConfig cfg = default_config();
  apply_override(cfg, "trainer.use_lstm=false");  // alias into the network section
  CHECK_FALSE(cfg.network.use_lstm);
  apply_override(cfg, "network.use_lstm=true");
  CHECK(cfg.network.use_lstm);
  apply_override(cfg, "trainer.share_weights=false");
  CHECK_FALSE(cfg.network.share_weights);
  apply_override(cfg, "controller.mu=4.5");
  CHECK(cfg.controller.mu == doctest::Approx(4.5));
  apply_override(cfg, "run.name=ablation-a");
  CHECK(cfg.run_name == "ablation-a");

  CHECK_THROWS_AS(apply_override(cfg, "nonsense"), std::invalid_argument);
  CHECK_THROWS_AS(apply_override(cfg, "trainer.unknown_key=1"), std::invalid_argument);
}

TEST_CASE("config hashes differ when any field differs") {
  RunConfig a = default_config();
  RunConfig b = default_config();
  b.trainer.gamma = 0.9;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("a missing config file is a nonzero exit naming the path") {
  const fs::path dir = fresh_dir("missing");
  const fs::path log = dir / "out.txt";
  const int rc = run_cli("train --config /definitely/not/here.json --out-dir " +
                             (dir / "run").string(),
                         log);
  CHECK(rc != 0);
  CHECK(slurp(log).find("/definitely/not/here.json") != std::string::npos);
}

TEST_CASE("train writes a self-describing run directory, byte-identical on rerun") {
  const fs::path dir = fresh_dir("train");
  write_micro_config(dir / "config.json", 11);

  const fs::path run_a = dir / "a";
  const fs::path run_b = dir / "b";
  REQUIRE(run_cli("train --config " + (dir / "config.json").string() + " --out-dir " +
                      run_a.string(),
                  dir / "log_a.txt") == 0);
  REQUIRE(run_cli("train --config " + (dir / "config.json").string() + " --out-dir " +
                      run_b.string(),
                  dir / "log_b.txt") == 0);

  CHECK(fs::exists(run_a / "resolved_config.json"));
  CHECK(fs::exists(run_a / "ckpt_final.bin"));
  CHECK(fs::exists(run_a / "ckpt_ep000008.bin"));
  CHECK(slurp(run_a / "training_log.csv") == slurp(run_b / "training_log.csv"));
}

TEST_CASE("override flags show up in the resolved run log") {
  const fs::path dir = fresh_dir("override");
  write_micro_config(dir / "config.json", 12);
  REQUIRE(run_cli("train --config " + (dir / "config.json").string() +
                      " --override trainer.use_lstm=false --out-dir " + (dir / "run").string(),
                  dir / "log.txt") == 0);
  const std::string resolved = slurp(dir / "run" / "resolved_config.json");
  CHECK(resolved.find("\"use_lstm\": false") != std::string::npos);
}

TEST_CASE("rollout traces are deterministic and sized to the episode") {
  const fs::path dir = fresh_dir("rollout");
  write_micro_config(dir / "config.json", 13);
  REQUIRE(run_cli("train --config " + (dir / "config.json").string() + " --out-dir " +
                      (dir / "run").string(),
                  dir / "log.txt") == 0);

  const std::string ckpt = (dir / "run" / "ckpt_final.bin").string();
  REQUIRE(run_cli("rollout --checkpoint " + ckpt + " --seed 5 --trace " +
                      (dir / "trace_a.csv").string(),
                  dir / "ra.txt") == 0);
  REQUIRE(run_cli("rollout --checkpoint " + ckpt + " --seed 5 --trace " +
                      (dir / "trace_b.csv").string(),
                  dir / "rb.txt") == 0);
  CHECK(slurp(dir / "trace_a.csv") == slurp(dir / "trace_b.csv"));

  // Row count = step count + header; the status column of the last row is terminal.
  std::istringstream lines(slurp(dir / "trace_a.csv"));
  std::string line, last;
  int rows = -1;  // discount the header
  while (std::getline(lines, line))
    if (!line.empty()) {
      ++rows;
      last = line;
    }
  CHECK(rows >= 1);
  const bool terminal = last.find("Success") != std::string::npos ||
                        last.find("Collision") != std::string::npos ||
                        last.find("Timeout") != std::string::npos;
  CHECK(terminal);
}

TEST_CASE("corrupted checkpoints are refused with an integrity message") {
  const fs::path dir = fresh_dir("corrupt");
  write_micro_config(dir / "config.json", 14);
  REQUIRE(run_cli("train --config " + (dir / "config.json").string() + " --out-dir " +
                      (dir / "run").string(),
                  dir / "log.txt") == 0);
  const fs::path ckpt = dir / "run" / "ckpt_final.bin";
  fs::resize_file(ckpt, fs::file_size(ckpt) / 3);
  const int rc = run_cli("rollout --checkpoint " + ckpt.string() + " --seed 1 --trace " +
                             (dir / "t.csv").string(),
                         dir / "log2.txt");
  CHECK(rc != 0);
  CHECK(slurp(dir / "log2.txt").find("checkpoint") != std::string::npos);
}

TEST_CASE("checkpoints refuse to run under a mismatched configuration") {
  const fs::path dir = fresh_dir("mismatch");
  write_micro_config(dir / "config.json", 15);
  REQUIRE(run_cli("train --config " + (dir / "config.json").string() + " --out-dir " +
                      (dir / "run").string(),
                  dir / "log.txt") == 0);
  // Same architecture, different reward constant: the hash must not match.
  const int rc = run_cli("eval --checkpoint " + (dir / "run" / "ckpt_final.bin").string() +
                             " --config " + (dir / "run" / "resolved_config.json").string() +
                             " --override reward.collision=-3 --episodes 2",
                         dir / "log2.txt");
  CHECK(rc != 0);
  CHECK(slurp(dir / "log2.txt").find("hash mismatch") != std::string::npos);
}

TEST_CASE("eval emits a JSON report with counts, rates and hashes") {
  const fs::path dir = fresh_dir("evalcmd");
  write_micro_config(dir / "config.json", 16);
  REQUIRE(run_cli("train --config " + (dir / "config.json").string() + " --out-dir " +
                      (dir / "run").string(),
                  dir / "log.txt") == 0);
  REQUIRE(run_cli("eval --checkpoint " + (dir / "run" / "ckpt_final.bin").string() +
                      " --episodes 6 --seed 3 --out " + (dir / "report.json").string(),
                  dir / "log2.txt") == 0);
  const auto j = nlohmann::json::parse(slurp(dir / "report.json"));
  CHECK(j.at("counts").at("n_episodes").get<int>() == 6);
  CHECK(j.at("counts").at("successes").get<int>() +
            j.at("counts").at("collisions").get<int>() +
            j.at("counts").at("timeouts").get<int>() ==
        6);
  CHECK(j.contains("ctr"));
  CHECK(j.contains("avg_reward"));
  CHECK(j.contains("checkpoint_hash"));
  CHECK(j.at("seed").get<std::uint64_t>() == 3);
}

TEST_CASE("inspect-checkpoint prints the tensor inventory") {
  const fs::path dir = fresh_dir("inspect");
  write_micro_config(dir / "config.json", 17);
  REQUIRE(run_cli("train --config " + (dir / "config.json").string() + " --out-dir " +
                      (dir / "run").string(),
                  dir / "log.txt") == 0);
  REQUIRE(run_cli("inspect-checkpoint --checkpoint " +
                      (dir / "run" / "ckpt_final.bin").string(),
                  dir / "log2.txt") == 0);
  const std::string out = slurp(dir / "log2.txt");
  CHECK(out.find("W1.0") != std::string::npos);
  CHECK(out.find("lstm.Wx") != std::string::npos);
  CHECK(out.find("W_Q") != std::string::npos);
  CHECK(out.find("total parameters") != std::string::npos);
}

}  // TEST_SUITE
