// Command-line workflows: expert -> demo -> train -> eval/compare, plus the
// brute-force oracle certification suite.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "hil/checkpoint.hpp"
#include "hil/config.hpp"
#include "hil/demo_io.hpp"
#include "hil/oracle.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw hil::ConfigError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw hil::ConfigError("write failed for " + path);
}

struct CommonArgs {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::optional<std::string> out_dir;
};

hil::RunConfig load_config(const CommonArgs& args) {
  hil::RunConfig cfg = hil::load_run_config(args.config_path);
  if (args.out_dir) cfg.output_dir = *args.out_dir;
  if (args.seed) cfg.seeds = {*args.seed};
  cfg.validate();
  fs::create_directories(cfg.output_dir);
  return cfg;
}

std::string out_path(const hil::RunConfig& cfg, const std::string& name) {
  return (fs::path(cfg.output_dir) / name).string();
}

std::vector<hil::ActionId> load_expert_policy(const hil::RunConfig& cfg,
                                              const hil::Environment& env) {
  const std::string path = out_path(cfg, "expert_policy.json");
  std::ifstream in(path);
  if (!in) throw hil::ConfigError("missing expert policy file " + path + " (run `expert` first)");
  json doc;
  try {
    in >> doc;
    auto greedy = doc.at("greedy").get<std::vector<int>>();
    if (static_cast<int>(greedy.size()) != env.n_states)
      throw hil::ConfigError("expert policy size does not match the environment");
    return greedy;
  } catch (const json::exception& e) {
    throw hil::ConfigError(std::string("expert policy file: ") + e.what());
  }
}

int cmd_expert(const CommonArgs& args) {
  const hil::RunConfig cfg = load_config(args);
  const hil::Environment env = hil::load_environment_spec(cfg.env_path);
  const hil::ValueIterationResult vi = hil::value_iteration(env, cfg.expert_tol);

  json values;
  values["values"] = vi.values;
  values["sweeps"] = vi.sweeps;
  values["residual"] = vi.residual;
  write_text(out_path(cfg, "values.json"), values.dump(2) + "\n");

  json policy;
  policy["env"] = env.name;
  policy["greedy"] = vi.greedy;
  write_text(out_path(cfg, "expert_policy.json"), policy.dump(2) + "\n");

  std::cout << "expert: value iteration converged in " << vi.sweeps
            << " sweeps, residual " << fmt(vi.residual) << "\n";
  return 0;
}

int cmd_demo(const CommonArgs& args) {
  const hil::RunConfig cfg = load_config(args);
  const hil::Environment env = hil::load_environment_spec(cfg.env_path);
  const auto expert = load_expert_policy(cfg, env);
  const hil::DemonstrationSet demos = hil::generate_demonstrations(
      env, expert, cfg.demo_steps, cfg.setup.demo_epsilon, cfg.seeds.front());
  hil::write_demo_file(out_path(cfg, "demos.txt"), demos);
  std::cout << "demo: wrote " << demos.total_steps() << " steps over " << demos.episodes.size()
            << " episodes\n";
  return 0;
}

int cmd_train(const CommonArgs& args) {
  const hil::RunConfig cfg = load_config(args);
  const hil::Environment env = hil::load_environment_spec(cfg.env_path);
  const hil::DemonstrationSet demos = hil::read_demo_file(out_path(cfg, "demos.txt"));
  if (demos.n_states != env.n_states || demos.n_actions != env.n_actions)
    throw hil::ConfigError("train: demo header does not match the environment");

  std::vector<hil::BatchIterLog> batch_log;
  std::vector<hil::OnlineStepLog> online_log;
  const hil::HierarchicalPolicy policy = hil::train_cell(
      cfg.algorithm, env, demos, cfg.setup, cfg.seeds.front(), &batch_log, &online_log);
  hil::save_checkpoint(out_path(cfg, "checkpoint.json"), policy);

  std::string log_text;
  if (cfg.algorithm == hil::TrainerKind::Batch) {
    log_text = "iteration,loglik,q_value,wall_ms\n";
    for (const auto& row : batch_log)
      log_text += std::to_string(row.iteration) + "," + fmt(row.loglik) + "," +
                  fmt(row.q_value) + "," + fmt(row.wall_ms) + "\n";
  } else {
    log_text = "t,q_value,wall_us\n";
    for (const auto& row : online_log)
      log_text += std::to_string(row.t) + "," + (row.has_q ? fmt(row.q_value) : "NA") + "," +
                  fmt(row.wall_us) + "\n";
  }
  write_text(out_path(cfg, "train_log.csv"), log_text);
  std::cout << "train: wrote checkpoint and training log\n";
  return 0;
}

int cmd_eval(const CommonArgs& args) {
  const hil::RunConfig cfg = load_config(args);
  const hil::Environment env = hil::load_environment_spec(cfg.env_path);
  const auto expert = load_expert_policy(cfg, env);
  const hil::HierarchicalPolicy policy = hil::load_checkpoint(out_path(cfg, "checkpoint.json"));

  const auto [expert_mean, expert_std] =
      hil::evaluate_expert(env, expert, cfg.setup.demo_epsilon,
                           cfg.setup.expert_eval_episodes, 0xE9A1ull);
  (void)expert_std;
  if (expert_mean == 0.0) throw hil::NumericError("eval: expert mean reward is zero");
  const hil::EvalResult ev =
      hil::evaluate_policy(policy, env, cfg.setup.n_eval_episodes, cfg.seeds.front());

  std::string text = "trainer,demo_size,seed,mean_reward,normalized_reward,wall_ms\n";
  text += "expert,0,0," + fmt(expert_mean) + "," + fmt(1.0) + ",0\n";
  text += hil::trainer_name(cfg.algorithm) + ",0," + std::to_string(cfg.seeds.front()) + "," +
          fmt(ev.mean) + "," + fmt(ev.mean / expert_mean) + ",0\n";
  write_text(out_path(cfg, "eval.csv"), text);
  std::cout << "eval: mean " << fmt(ev.mean) << ", normalized " << fmt(ev.mean / expert_mean)
            << "\n";
  return 0;
}

int cmd_compare(const CommonArgs& args) {
  const hil::RunConfig cfg = load_config(args);
  const hil::Environment env = hil::load_environment_spec(cfg.env_path);
  const auto expert = load_expert_policy(cfg, env);

  std::string rows = "trainer,demo_size,seed,mean_reward,normalized_reward,wall_ms\n";
  std::string summary = "trainer,demo_size,mean_normalized,std_normalized,n_seeds\n";
  for (const hil::TrainerKind trainer : {hil::TrainerKind::Batch, hil::TrainerKind::Online}) {
    const hil::SweepResult res =
        hil::sweep(trainer, env, expert, cfg.demo_sizes, cfg.seeds, cfg.setup);
    for (const auto& cell : res.cells) {
      rows += hil::trainer_name(cell.trainer) + "," + std::to_string(cell.demo_size) + "," +
              std::to_string(cell.seed) + ",";
      if (cell.failed) {
        rows += "NA,NA," + fmt(cell.wall_ms) + "\n";
        std::cerr << "compare: cell failed (" << hil::trainer_name(cell.trainer) << ", size "
                  << cell.demo_size << ", seed " << cell.seed << "): " << cell.error << "\n";
      } else {
        rows += fmt(cell.mean_reward) + "," + fmt(cell.normalized_reward) + "," +
                fmt(cell.wall_ms) + "\n";
      }
    }
    for (const auto& rep : res.reports) {
      const double std_norm =
          res.expert_mean != 0.0 ? rep.std_over_seeds / std::abs(res.expert_mean) : 0.0;
      summary += hil::trainer_name(rep.trainer) + "," + std::to_string(rep.demo_size) + "," +
                 fmt(rep.normalized_reward) + "," + fmt(std_norm) + "," +
                 std::to_string(rep.n_seeds) + "\n";
    }
  }
  write_text(out_path(cfg, "report.csv"), rows);
  write_text(out_path(cfg, "summary.csv"), summary);
  std::cout << "compare: wrote report.csv and summary.csv\n";
  return 0;
}

int cmd_oracle_check(const CommonArgs& args, uint64_t seed, int instances) {
  const auto results = hil::oracle::run_oracle_suite(seed, instances);
  std::string report;
  bool all_pass = true;
  for (const auto& r : results) {
    report += std::string(r.pass ? "PASS" : "FAIL") + "  " + r.name + "  max_deviation=" +
              fmt(r.max_deviation) + "  tolerance=" + fmt(r.tolerance) + "  instances=" +
              std::to_string(r.instances) + "\n";
    all_pass = all_pass && r.pass;
  }
  std::cout << report;
  if (args.out_dir) {
    fs::create_directories(*args.out_dir);
    write_text((fs::path(*args.out_dir) / "oracle_report.txt").string(), report);
  }
  return all_pass ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hierarchical imitation learning with options: batch and streaming trainers"};
  app.require_subcommand(1);

  CommonArgs args;
  uint64_t oracle_seed = 7;
  int oracle_instances = 50;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    if (needs_config)
      sub->add_option("--config", args.config_path, "JSON run configuration")->required();
    sub->add_option("--seed", [&args](const std::vector<std::string>& v) {
      try {
        size_t used = 0;
        args.seed = std::stoull(v.front(), &used);
        return used == v.front().size();
      } catch (const std::exception&) {
        return false;
      }
    }, "override the configured seed");
    sub->add_option("--out", [&args](const std::vector<std::string>& v) {
      args.out_dir = v.front();
      return true;
    }, "override the output directory");
  };

  CLI::App* expert = app.add_subcommand("expert", "value-iteration expert for the environment");
  add_common(expert, true);
  CLI::App* demo = app.add_subcommand("demo", "generate expert demonstrations");
  add_common(demo, true);
  CLI::App* train = app.add_subcommand("train", "train a hierarchical policy on demonstrations");
  add_common(train, true);
  CLI::App* evalc = app.add_subcommand("eval", "evaluate a trained checkpoint");
  add_common(evalc, true);
  CLI::App* compare = app.add_subcommand("compare", "batch-vs-online sweep over sizes and seeds");
  add_common(compare, true);
  CLI::App* oracle = app.add_subcommand("oracle-check", "run the brute-force oracle suites");
  add_common(oracle, false);
  oracle->add_option("--instances", oracle_instances, "number of random instances per suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*expert) return cmd_expert(args);
    if (*demo) return cmd_demo(args);
    if (*train) return cmd_train(args);
    if (*evalc) return cmd_eval(args);
    if (*compare) return cmd_compare(args);
    if (*oracle) {
      if (args.seed) oracle_seed = *args.seed;
      return cmd_oracle_check(args, oracle_seed, oracle_instances);
    }
  } catch (const hil::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
