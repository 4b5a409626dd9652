#ifndef HIL_EVAL_HPP
#define HIL_EVAL_HPP

#include <string>
#include <vector>

#include "hil/batch_em.hpp"
#include "hil/env.hpp"
#include "hil/online_em.hpp"
#include "hil/opgm.hpp"

namespace hil {

struct EvalResult {
  double mean = 0.0;
  double std = 0.0;
};

// Mean/std of undiscounted episodic reward over hierarchical rollouts with
// o_0 drawn uniformly and s_1 from the environment's initial distribution.
EvalResult evaluate_policy(const HierarchicalPolicy& policy, const Environment& env,
                           int n_episodes, uint64_t seed);

enum class TrainerKind { Batch, Online };

std::string trainer_name(TrainerKind k);

// Everything a sweep cell needs to train one policy from scratch.
struct TrainSetup {
  ParamKind policy_kind = ParamKind::Tabular;
  int n_options = 2;
  MlpSpec mlp;
  BatchConfig batch;
  OnlineConfig online;
  RegularizerConfig reg;
  double demo_epsilon = 0.05;
  int n_eval_episodes = 100;
  int expert_eval_episodes = 2000;
  // Match the online gradient-step budget to the batch one by thinning
  // M-steps (the comparison is defined at equal gradient-step counts).
  bool equalize_gradient_steps = true;
};

struct SweepCell {
  TrainerKind trainer = TrainerKind::Batch;
  long demo_size = 0;
  uint64_t seed = 0;
  double mean_reward = 0.0;
  double normalized_reward = 0.0;
  double wall_ms = 0.0;
  bool failed = false;
  std::string error;
};

// Aggregate over seeds for one (trainer, size) pair; expert scores 1.
struct EvalReport {
  TrainerKind trainer = TrainerKind::Batch;
  long demo_size = 0;
  double mean_reward = 0.0;        // mean of per-seed means
  double normalized_reward = 0.0;  // mean_reward / expert_mean
  double std_over_seeds = 0.0;     // population std of per-seed means
  int n_episodes = 0;
  int n_seeds = 0;
  double wall_time_train = 0.0;  // seconds, summed over seeds
};

struct SweepResult {
  double expert_mean = 0.0;
  std::vector<SweepCell> cells;
  std::vector<EvalReport> reports;
};

// One trainer, all (size, seed) combinations: fresh uniform(-0.5, 0.5)
// init, train, evaluate, aggregate. Per-cell training failures are
// recorded, not fatal.
SweepResult sweep(TrainerKind trainer, const Environment& env,
                  const std::vector<ActionId>& expert_policy, const std::vector<long>& demo_sizes,
                  const std::vector<uint64_t>& seeds, const TrainSetup& setup);

// Trains one cell; exposed for the CLI train command.
HierarchicalPolicy train_cell(TrainerKind trainer, const Environment& env,
                              const DemonstrationSet& demos, const TrainSetup& setup,
                              uint64_t seed, std::vector<BatchIterLog>* batch_log,
                              std::vector<OnlineStepLog>* online_log);

}  // namespace hil

#endif  // HIL_EVAL_HPP
