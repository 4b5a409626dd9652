#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "hil/checkpoint.hpp"
#include "hil/config.hpp"
#include "hil/demo_io.hpp"
#include "support.hpp"

using namespace hil;
using namespace hil::testing;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const fs::path dir = fs::temp_directory_path() / "hil_io_test";
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("checkpoint round-trip is bit exact for both kinds") {
  Rng rng(5);
  const ModelDims dims{4, 3, 2};
  MlpSpec spec;
  spec.hidden_lo_b = 5;
  spec.hidden_hi = 7;

  for (int kind = 0; kind < 2; ++kind) {
    const HierarchicalPolicy pol = kind == 0 ? random_tabular_policy(rng, dims)
                                             : random_mlp_policy(rng, dims, spec);
    const std::string text = checkpoint_to_string(pol);
    const HierarchicalPolicy back = checkpoint_from_string(text);
    CHECK(back.params().theta_hi == pol.params().theta_hi);
    CHECK(back.params().theta_lo == pol.params().theta_lo);
    CHECK(back.params().theta_b == pol.params().theta_b);
    CHECK(back.states().features == pol.states().features);
    CHECK(back.kind() == pol.kind());
    // serialization itself is deterministic
    CHECK(checkpoint_to_string(back) == text);
  }
}

TEST_CASE("checkpoint file round-trip is byte identical") {
  Rng rng(6);
  const ModelDims dims{3, 2, 2};
  const auto pol = random_tabular_policy(rng, dims);
  const auto dir = temp_dir();
  save_checkpoint((dir / "a.json").string(), pol);
  const auto loaded = load_checkpoint((dir / "a.json").string());
  save_checkpoint((dir / "b.json").string(), loaded);
  CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));
}

TEST_CASE("demo file format and round-trip") {
  GridworldSpec spec;
  spec.width = 4;
  spec.height = 4;
  spec.goal_cells = {{3, 3}};
  const auto env = build_gridworld(spec);
  const auto vi = value_iteration(env, 1e-8);
  const auto demos = generate_demonstrations(env, vi.greedy, 100, 0.1, 13);

  const std::string text = demo_to_string(demos);
  CHECK(text.substr(0, 1) == "{");
  const auto back = demo_from_string(text);
  CHECK(back.n_states == demos.n_states);
  CHECK(back.n_actions == demos.n_actions);
  CHECK(back.env_name == demos.env_name);
  REQUIRE(back.episodes.size() == demos.episodes.size());
  for (size_t e = 0; e < back.episodes.size(); ++e) {
    REQUIRE(back.episodes[e].size() == demos.episodes[e].size());
    for (size_t t = 0; t < back.episodes[e].size(); ++t) {
      CHECK(back.episodes[e][t].state == demos.episodes[e][t].state);
      CHECK(back.episodes[e][t].action == demos.episodes[e][t].action);
    }
  }
  CHECK(demo_to_string(back) == text);

  SUBCASE("contains at least the requested rows") {
    long rows = 0;
    for (char c : text)
      if (c == '\n') ++rows;
    CHECK(rows - 1 >= 100);  // header + data lines
  }

  SUBCASE("malformed rows are rejected") {
    CHECK_THROWS_AS(demo_from_string("{\"version\":1,\"n_states\":4,\"n_actions\":2,"
                                     "\"env\":\"x\"}\n0,1,99,0\n"),
                    ConfigError);
    CHECK_THROWS_AS(demo_from_string("not json\n"), ConfigError);
  }
}

TEST_CASE("environment specs parse with unknown-key rejection") {
  const std::string grid =
      R"({"kind":"gridworld","width":5,"height":4,"slip_prob":0.1,"goal_cells":[[4,3]],)"
      R"("start_cells":[[0,0]],"discount":0.95,"horizon":40})";
  const auto env = environment_from_json_string(grid);
  CHECK(env.n_states == 20);
  CHECK(env.horizon == 40);

  CHECK_THROWS_AS(environment_from_json_string(R"({"kind":"gridworld","widht":5})"), ConfigError);
  CHECK_THROWS_AS(environment_from_json_string(R"({"kind":"volcano"})"), ConfigError);

  const auto chain = environment_from_json_string(
      R"({"kind":"two_state_chain","success_prob":1.0,"decay_prob":0.0})");
  CHECK(chain.n_states == 2);
}

TEST_CASE("run config parses and validates") {
  const auto dir = temp_dir();
  {
    std::ofstream env_file(dir / "env.json");
    env_file << R"({"kind":"two_state_chain"})";
  }
  const std::string cfg_text = R"({
    "env_path": "env.json",
    "algorithm": "online",
    "policy": {"kind": "tabular", "n_options": 2},
    "online": {"t_min": 5, "gradient_steps": 3, "mstep": "tabular"},
    "regularizers": {"lambda_b": 0.5},
    "seeds": [3, 4],
    "demo_sizes": [100],
    "demo_steps": 120,
    "output_dir": "out"
  })";
  const RunConfig cfg = run_config_from_string(cfg_text, dir.string());
  CHECK(cfg.algorithm == TrainerKind::Online);
  CHECK(cfg.setup.online.t_min == 5);
  CHECK(cfg.setup.reg.lambda_b == 0.5);
  CHECK(cfg.seeds.size() == 2);
  cfg.validate();

  CHECK_THROWS_AS(run_config_from_string(R"({"env_path":"e","algorthm":"batch"})", ""),
                  ConfigError);
  CHECK_THROWS_AS(run_config_from_string(R"({"env_path":"e","batch":{"n_iter":2}})", ""),
                  ConfigError);
}

TEST_CASE("cli exercises the full workflow deterministically") {
  const char* cli = std::getenv("HIL_CLI");
  REQUIRE(cli != nullptr);
  const fs::path dir = temp_dir() / "cli";
  fs::remove_all(dir);
  fs::create_directories(dir);

  {
    std::ofstream env_file(dir / "env.json");
    env_file << R"({"kind":"gridworld","width":4,"height":4,"goal_cells":[[3,3]],)"
             << R"("start_cells":[[0,0]],"reward_noise_std":0.1,"horizon":30})";
    std::ofstream cfg_file(dir / "cfg.json");
    cfg_file << R"({"env_path":"env.json","algorithm":"batch",)"
             << R"("policy":{"kind":"tabular","n_options":2},)"
             << R"("batch":{"n_iterations":2,"mstep":"tabular"},)"
             << R"("regularizers":{"lambda_b":0,"lambda_v":0,"lambda_kl":0},)"
             << R"("demo_steps":200,"seeds":[5],"eval":{"n_episodes":40,"expert_episodes":100}})";
  }

  const std::string base = std::string(cli) + " ";
  auto run = [&](const std::string& cmd) {
    return std::system((base + cmd + " >/dev/null 2>&1").c_str());
  };
  const std::string common =
      " --config " + (dir / "cfg.json").string() + " --out " + (dir / "out").string();

  REQUIRE(run("expert" + common) == 0);
  REQUIRE(run("demo" + common) == 0);
  REQUIRE(run("train" + common) == 0);
  REQUIRE(run("eval" + common) == 0);
  CHECK(fs::exists(dir / "out" / "values.json"));
  CHECK(fs::exists(dir / "out" / "expert_policy.json"));
  CHECK(fs::exists(dir / "out" / "demos.txt"));
  CHECK(fs::exists(dir / "out" / "checkpoint.json"));
  CHECK(fs::exists(dir / "out" / "train_log.csv"));
  CHECK(fs::exists(dir / "out" / "eval.csv"));

  SUBCASE("rerunning demo and train yields byte-identical outputs") {
    const std::string demos1 = slurp(dir / "out" / "demos.txt");
    const std::string ckpt1 = slurp(dir / "out" / "checkpoint.json");
    REQUIRE(run("demo" + common) == 0);
    REQUIRE(run("train" + common) == 0);
    CHECK(slurp(dir / "out" / "demos.txt") == demos1);
    CHECK(slurp(dir / "out" / "checkpoint.json") == ckpt1);
  }

  SUBCASE("bad config path exits with usage code") {
    CHECK(run("train --config /nonexistent.json") != 0);
  }

  SUBCASE("online training writes the per-step log format") {
    std::ofstream cfg_file(dir / "cfg_online.json");
    cfg_file << R"({"env_path":"env.json","algorithm":"online",)"
             << R"("policy":{"kind":"tabular","n_options":2},)"
             << R"("online":{"t_min":50,"mstep_every":25,"gradient_steps":3},)"
             << R"("regularizers":{"lambda_b":1,"lambda_v":0.1,"lambda_kl":0.01},)"
             << R"("demo_steps":200,"seeds":[5]})";
    cfg_file.close();
    const std::string common2 =
        " --config " + (dir / "cfg_online.json").string() + " --out " + (dir / "out").string();
    REQUIRE(run("train" + common2) == 0);
    const std::string log = slurp(dir / "out" / "train_log.csv");
    CHECK(log.rfind("t,q_value,wall_us\n", 0) == 0);
    CHECK(log.find(",NA,") != std::string::npos);     // rows before the first M-step
    CHECK(log.find("51,") != std::string::npos);      // first firing step logs a q value
  }

  SUBCASE("oracle-check passes on the correct build") {
    CHECK(run("oracle-check --instances 10") == 0);
  }
}

TEST_CASE("cli expert on the absorbing chain writes the closed-form values") {
  const char* cli = std::getenv("HIL_CLI");
  REQUIRE(cli != nullptr);
  const fs::path dir = temp_dir() / "chain";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream env_file(dir / "env.json");
    env_file << R"({"kind":"two_state_chain","success_prob":1.0,"decay_prob":0.0,)"
             << R"("discount":0.9})";
    std::ofstream cfg_file(dir / "cfg.json");
    cfg_file << R"({"env_path":"env.json","expert_tol":1e-10})";
  }
  const std::string cmd = std::string(cli) + " expert --config " + (dir / "cfg.json").string() +
                          " --out " + (dir / "out").string() + " >/dev/null 2>&1";
  REQUIRE(std::system(cmd.c_str()) == 0);

  const std::string values = slurp(dir / "out" / "values.json");
  // V = [9, 10] at gamma = 0.9 in the absorbing variant
  auto near = [&](double expected) {
    // parse the two values out of the JSON array
    const size_t open = values.find('[');
    const size_t comma = values.find(',', open);
    const size_t close = values.find(']', comma);
    const double v0 = std::stod(values.substr(open + 1, comma - open - 1));
    const double v1 = std::stod(values.substr(comma + 1, close - comma - 1));
    return std::abs(v0 - 9.0) < 1e-6 && std::abs(v1 - expected) < 1e-6;
  };
  CHECK(near(10.0));

  SUBCASE("byte-identical on rerun") {
    const std::string first = slurp(dir / "out" / "values.json");
    REQUIRE(std::system(cmd.c_str()) == 0);
    CHECK(slurp(dir / "out" / "values.json") == first);
  }
}
