#include "hil/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

namespace hil {

using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// Typos in config files must fail loudly, not silently skew a sweep.
void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!allowed.count(key))
      throw ConfigError("unknown key \"" + key + "\" in " + where);
  }
}

std::vector<std::pair<int, int>> parse_cells(const json& arr, const std::string& where) {
  std::vector<std::pair<int, int>> out;
  for (const json& cell : arr) {
    if (!cell.is_array() || cell.size() != 2)
      throw ConfigError(where + ": cells must be [x, y] pairs");
    out.emplace_back(cell[0].get<int>(), cell[1].get<int>());
  }
  return out;
}

json cells_to_json(const std::vector<std::pair<int, int>>& cells) {
  json arr = json::array();
  for (const auto& [x, y] : cells) arr.push_back({x, y});
  return arr;
}

}  // namespace

Environment environment_from_json_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("environment spec: invalid JSON: ") + e.what());
  }
  try {
    const std::string kind = doc.at("kind").get<std::string>();
    if (kind == "gridworld") {
      reject_unknown_keys(doc,
                          {"kind", "width", "height", "slip_prob", "reward_noise_std",
                           "goal_cells", "start_cells", "step_reward", "goal_reward", "discount",
                           "horizon"},
                          "gridworld spec");
      GridworldSpec spec;
      if (doc.contains("width")) spec.width = doc["width"].get<int>();
      if (doc.contains("height")) spec.height = doc["height"].get<int>();
      if (doc.contains("slip_prob")) spec.slip_prob = doc["slip_prob"].get<double>();
      if (doc.contains("reward_noise_std"))
        spec.reward_noise_std = doc["reward_noise_std"].get<double>();
      if (doc.contains("goal_cells")) spec.goal_cells = parse_cells(doc["goal_cells"], "goal_cells");
      if (doc.contains("start_cells"))
        spec.start_cells = parse_cells(doc["start_cells"], "start_cells");
      if (doc.contains("step_reward")) spec.step_reward = doc["step_reward"].get<double>();
      if (doc.contains("goal_reward")) spec.goal_reward = doc["goal_reward"].get<double>();
      if (doc.contains("discount")) spec.discount = doc["discount"].get<double>();
      if (doc.contains("horizon")) spec.horizon = doc["horizon"].get<int>();
      return build_gridworld(spec);
    }
    if (kind == "two_state_chain") {
      reject_unknown_keys(doc, {"kind", "success_prob", "decay_prob", "discount", "horizon"},
                          "two_state_chain spec");
      double success = 0.7, decay = 0.3, discount = 0.9;
      int horizon = 50;
      if (doc.contains("success_prob")) success = doc["success_prob"].get<double>();
      if (doc.contains("decay_prob")) decay = doc["decay_prob"].get<double>();
      if (doc.contains("discount")) discount = doc["discount"].get<double>();
      if (doc.contains("horizon")) horizon = doc["horizon"].get<int>();
      return build_two_state_chain(success, decay, discount, horizon);
    }
    throw ConfigError("environment spec: unknown kind \"" + kind + "\"");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("environment spec: malformed field: ") + e.what());
  }
}

Environment load_environment_spec(const std::string& path) {
  return environment_from_json_string(read_file(path));
}

std::string environment_spec_to_string(const GridworldSpec& spec) {
  json doc;
  doc["kind"] = "gridworld";
  doc["width"] = spec.width;
  doc["height"] = spec.height;
  doc["slip_prob"] = spec.slip_prob;
  doc["reward_noise_std"] = spec.reward_noise_std;
  doc["goal_cells"] = cells_to_json(spec.goal_cells);
  doc["start_cells"] = cells_to_json(spec.start_cells);
  doc["step_reward"] = spec.step_reward;
  doc["goal_reward"] = spec.goal_reward;
  doc["discount"] = spec.discount;
  doc["horizon"] = spec.horizon;
  return doc.dump(2);
}

void RunConfig::validate() const {
  if (env_path.empty()) throw ConfigError("config: env path required");
  if (!std::filesystem::exists(env_path)) throw ConfigError("config: env path does not exist");
  if (seeds.empty()) throw ConfigError("config: at least one seed required");
  if (demo_sizes.empty()) throw ConfigError("config: at least one demo size required");
  setup.batch.validate();
  setup.online.validate();
  setup.reg.validate();
  if (demo_steps < 1) throw ConfigError("config: demo_steps must be >= 1");
  if (setup.n_options < 1) throw ConfigError("config: n_options must be >= 1");
  if (setup.n_eval_episodes < 1) throw ConfigError("config: eval episodes must be >= 1");
  if (!(expert_tol > 0.0)) throw ConfigError("config: expert_tol must be > 0");
}

RunConfig run_config_from_string(const std::string& text, const std::string& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }

  RunConfig cfg;
  try {
    reject_unknown_keys(doc,
                        {"env_path", "algorithm", "policy", "batch", "online", "regularizers",
                         "seeds", "demo_sizes", "demo_steps", "demo_epsilon", "eval", "output_dir",
                         "expert_tol", "equalize_gradient_steps"},
                        "config");
    cfg.env_path = doc.at("env_path").get<std::string>();
    if (!cfg.env_path.empty() && cfg.env_path[0] != '/' && !base_dir.empty())
      cfg.env_path = (std::filesystem::path(base_dir) / cfg.env_path).string();

    if (doc.contains("algorithm")) {
      const std::string alg = doc["algorithm"].get<std::string>();
      if (alg == "batch") {
        cfg.algorithm = TrainerKind::Batch;
      } else if (alg == "online") {
        cfg.algorithm = TrainerKind::Online;
      } else {
        throw ConfigError("config: algorithm must be \"batch\" or \"online\"");
      }
    }

    if (doc.contains("policy")) {
      const json& p = doc["policy"];
      reject_unknown_keys(
          p, {"kind", "n_options", "hidden_lo_b", "hidden_hi", "init_low", "init_high"},
          "policy");
      if (p.contains("kind")) {
        const std::string kind = p["kind"].get<std::string>();
        if (kind == "tabular") {
          cfg.setup.policy_kind = ParamKind::Tabular;
        } else if (kind == "mlp") {
          cfg.setup.policy_kind = ParamKind::Mlp;
        } else {
          throw ConfigError("config: policy.kind must be \"tabular\" or \"mlp\"");
        }
      }
      if (p.contains("n_options")) cfg.setup.n_options = p["n_options"].get<int>();
      if (p.contains("hidden_lo_b")) cfg.setup.mlp.hidden_lo_b = p["hidden_lo_b"].get<int>();
      if (p.contains("hidden_hi")) cfg.setup.mlp.hidden_hi = p["hidden_hi"].get<int>();
      if (p.contains("init_low")) cfg.setup.mlp.init_low = p["init_low"].get<double>();
      if (p.contains("init_high")) cfg.setup.mlp.init_high = p["init_high"].get<double>();
    }

    if (doc.contains("batch")) {
      const json& b = doc["batch"];
      reject_unknown_keys(b, {"n_iterations", "mstep", "gradient_steps", "minibatch",
                              "learning_rate"},
                          "batch");
      if (b.contains("n_iterations")) cfg.setup.batch.n_iterations = b["n_iterations"].get<int>();
      if (b.contains("mstep")) {
        const std::string m = b["mstep"].get<std::string>();
        if (m == "tabular") {
          cfg.setup.batch.mstep = MStepKind::ClosedFormTabular;
        } else if (m == "gradient") {
          cfg.setup.batch.mstep = MStepKind::Gradient;
        } else {
          throw ConfigError("config: batch.mstep must be \"tabular\" or \"gradient\"");
        }
      }
      if (b.contains("gradient_steps"))
        cfg.setup.batch.gradient_steps = b["gradient_steps"].get<int>();
      if (b.contains("minibatch")) cfg.setup.batch.minibatch = b["minibatch"].get<int>();
      if (b.contains("learning_rate"))
        cfg.setup.batch.learning_rate = b["learning_rate"].get<double>();
    }

    if (doc.contains("online")) {
      const json& o = doc["online"];
      reject_unknown_keys(
          o, {"t_min", "mstep_every", "gradient_steps", "learning_rate", "mstep", "prior"},
          "online");
      if (o.contains("t_min")) cfg.setup.online.t_min = o["t_min"].get<long>();
      if (o.contains("mstep_every")) cfg.setup.online.mstep_every = o["mstep_every"].get<long>();
      if (o.contains("gradient_steps"))
        cfg.setup.online.gradient_steps = o["gradient_steps"].get<int>();
      if (o.contains("learning_rate"))
        cfg.setup.online.learning_rate = o["learning_rate"].get<double>();
      if (o.contains("mstep")) {
        const std::string m = o["mstep"].get<std::string>();
        if (m == "tabular") {
          cfg.setup.online.mstep = MStepKind::ClosedFormTabular;
        } else if (m == "gradient") {
          cfg.setup.online.mstep = MStepKind::Gradient;
        } else {
          throw ConfigError("config: online.mstep must be \"tabular\" or \"gradient\"");
        }
      }
      if (o.contains("prior")) cfg.setup.online.prior = o["prior"].get<std::vector<double>>();
    }

    if (doc.contains("regularizers")) {
      const json& r = doc["regularizers"];
      reject_unknown_keys(r, {"lambda_b", "lambda_v", "lambda_kl", "tau"}, "regularizers");
      if (r.contains("lambda_b")) cfg.setup.reg.lambda_b = r["lambda_b"].get<double>();
      if (r.contains("lambda_v")) cfg.setup.reg.lambda_v = r["lambda_v"].get<double>();
      if (r.contains("lambda_kl")) cfg.setup.reg.lambda_kl = r["lambda_kl"].get<double>();
      if (r.contains("tau")) cfg.setup.reg.tau = r["tau"].get<double>();
    }

    if (doc.contains("seeds")) cfg.seeds = doc["seeds"].get<std::vector<uint64_t>>();
    if (doc.contains("demo_sizes")) cfg.demo_sizes = doc["demo_sizes"].get<std::vector<long>>();
    if (doc.contains("demo_steps")) cfg.demo_steps = doc["demo_steps"].get<long>();
    if (doc.contains("demo_epsilon")) cfg.setup.demo_epsilon = doc["demo_epsilon"].get<double>();
    if (doc.contains("eval")) {
      const json& e = doc["eval"];
      reject_unknown_keys(e, {"n_episodes", "expert_episodes"}, "eval");
      if (e.contains("n_episodes")) cfg.setup.n_eval_episodes = e["n_episodes"].get<int>();
      if (e.contains("expert_episodes"))
        cfg.setup.expert_eval_episodes = e["expert_episodes"].get<int>();
    }
    if (doc.contains("output_dir")) cfg.output_dir = doc["output_dir"].get<std::string>();
    if (doc.contains("expert_tol")) cfg.expert_tol = doc["expert_tol"].get<double>();
    if (doc.contains("equalize_gradient_steps"))
      cfg.setup.equalize_gradient_steps = doc["equalize_gradient_steps"].get<bool>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: malformed field: ") + e.what());
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  return run_config_from_string(read_file(path),
                                std::filesystem::path(path).parent_path().string());
}

}  // namespace hil
