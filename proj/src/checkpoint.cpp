#include "hil/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

namespace hil {

using nlohmann::json;

std::string checkpoint_to_string(const HierarchicalPolicy& policy) {
  json doc;
  doc["version"] = 1;
  doc["param_kind"] = policy.kind() == ParamKind::Tabular ? "tabular" : "mlp";
  doc["dims"] = {{"n_states", policy.dims().n_states},
                 {"n_actions", policy.dims().n_actions},
                 {"n_options", policy.dims().n_options}};
  if (policy.kind() == ParamKind::Mlp) {
    const MlpSpec& sp = policy.mlp_spec();
    doc["mlp_spec"] = {{"hidden_lo_b", sp.hidden_lo_b},
                       {"hidden_hi", sp.hidden_hi},
                       {"init_low", sp.init_low},
                       {"init_high", sp.init_high}};
  }
  doc["state_table"] = {{"feature_dim", policy.states().feature_dim},
                        {"features", policy.states().features}};
  if (!policy.states().labels.empty()) doc["state_table"]["labels"] = policy.states().labels;
  doc["theta_hi"] = policy.params().theta_hi;
  doc["theta_lo"] = policy.params().theta_lo;
  doc["theta_b"] = policy.params().theta_b;
  return doc.dump();
}

HierarchicalPolicy checkpoint_from_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("checkpoint: invalid JSON: ") + e.what());
  }
  try {
    if (doc.at("version").get<int>() != 1) throw ConfigError("checkpoint: unsupported version");
    ModelDims dims;
    dims.n_states = doc.at("dims").at("n_states").get<int>();
    dims.n_actions = doc.at("dims").at("n_actions").get<int>();
    dims.n_options = doc.at("dims").at("n_options").get<int>();

    StateTable table;
    table.feature_dim = doc.at("state_table").at("feature_dim").get<int>();
    table.features = doc.at("state_table").at("features").get<std::vector<double>>();
    if (doc.at("state_table").contains("labels"))
      table.labels = doc.at("state_table").at("labels").get<std::vector<std::string>>();

    PolicyParams params;
    const std::string kind = doc.at("param_kind").get<std::string>();
    if (kind == "tabular") {
      params.kind = ParamKind::Tabular;
    } else if (kind == "mlp") {
      params.kind = ParamKind::Mlp;
    } else {
      throw ConfigError("checkpoint: unknown param_kind");
    }
    params.theta_hi = doc.at("theta_hi").get<std::vector<double>>();
    params.theta_lo = doc.at("theta_lo").get<std::vector<double>>();
    params.theta_b = doc.at("theta_b").get<std::vector<double>>();

    MlpSpec spec;
    if (params.kind == ParamKind::Mlp) {
      spec.hidden_lo_b = doc.at("mlp_spec").at("hidden_lo_b").get<int>();
      spec.hidden_hi = doc.at("mlp_spec").at("hidden_hi").get<int>();
      spec.init_low = doc.at("mlp_spec").at("init_low").get<double>();
      spec.init_high = doc.at("mlp_spec").at("init_high").get<double>();
    }
    return HierarchicalPolicy(dims, std::move(table), std::move(params), spec);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("checkpoint: missing or malformed field: ") + e.what());
  }
}

void save_checkpoint(const std::string& path, const HierarchicalPolicy& policy) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("save_checkpoint: cannot open " + path);
  out << checkpoint_to_string(policy) << "\n";
  if (!out) throw ConfigError("save_checkpoint: write failed for " + path);
}

HierarchicalPolicy load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("load_checkpoint: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return checkpoint_from_string(text);
}

}  // namespace hil
