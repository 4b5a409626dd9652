#ifndef HIL_CONFIG_HPP
#define HIL_CONFIG_HPP

#include <string>
#include <vector>

#include "hil/env.hpp"
#include "hil/eval.hpp"

namespace hil {

// Environment description document: {"kind": "gridworld", ...spec fields}
// or {"kind": "two_state_chain", ...}. Unknown keys are rejected.
Environment load_environment_spec(const std::string& path);
Environment environment_from_json_string(const std::string& text);
std::string environment_spec_to_string(const GridworldSpec& spec);

// Top-level run configuration shared by the CLI commands.
struct RunConfig {
  std::string env_path;
  TrainerKind algorithm = TrainerKind::Batch;
  TrainSetup setup;
  std::vector<uint64_t> seeds = {1};
  std::vector<long> demo_sizes = {1000};
  long demo_steps = 1000;
  std::string output_dir = ".";
  double expert_tol = 1e-8;

  void validate() const;
};

RunConfig load_run_config(const std::string& path);
RunConfig run_config_from_string(const std::string& text, const std::string& base_dir);

}  // namespace hil

#endif  // HIL_CONFIG_HPP
