#include "hil/eval.hpp"

#include <chrono>
#include <cmath>

namespace hil {

namespace {

double now_ms() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

}  // namespace

EvalResult evaluate_policy(const HierarchicalPolicy& policy, const Environment& env,
                           int n_episodes, uint64_t seed) {
  if (n_episodes < 1) throw ConfigError("evaluate_policy: n_episodes must be >= 1");
  env.validate();
  Rng rng(seed);
  const int n_options = policy.dims().n_options;
  double sum = 0.0, sumsq = 0.0;
  for (int e = 0; e < n_episodes; ++e) {
    const OptionId o0 = static_cast<OptionId>(rng.uniform_below(n_options));
    const StateId s1 = env.sample_initial(rng);
    const RolloutResult r = rollout(policy, env, o0, s1, env.horizon, rng);
    sum += r.total_reward;
    sumsq += r.total_reward * r.total_reward;
  }
  const double mean = sum / n_episodes;
  const double var = std::max(0.0, sumsq / n_episodes - mean * mean);
  return {mean, std::sqrt(var)};
}

std::string trainer_name(TrainerKind k) { return k == TrainerKind::Batch ? "batch" : "online"; }

HierarchicalPolicy train_cell(TrainerKind trainer, const Environment& env,
                              const DemonstrationSet& demos, const TrainSetup& setup,
                              uint64_t seed, std::vector<BatchIterLog>* batch_log,
                              std::vector<OnlineStepLog>* online_log) {
  const ModelDims dims = env.dims(setup.n_options);
  Rng init_rng(splitmix64(seed ^ 0x494e4954ull));
  HierarchicalPolicy policy = HierarchicalPolicy::random_init(setup.policy_kind, dims,
                                                              env.state_table, init_rng, setup.mlp);

  if (trainer == TrainerKind::Batch) {
    BatchResult res = run_batch_bw(demos.to_trajectories(dims), setup.batch, std::move(policy),
                                   setup.reg, splitmix64(seed ^ 0x42415443ull));
    if (batch_log) *batch_log = std::move(res.log);
    return std::move(res.policy);
  }

  OnlineConfig cfg = setup.online;
  const std::vector<Step> stream = demos.to_stream();
  if (setup.equalize_gradient_steps && cfg.mstep == MStepKind::Gradient) {
    const long budget =
        static_cast<long>(setup.batch.n_iterations) * setup.batch.gradient_steps;
    const long samples = std::max<long>(1, static_cast<long>(stream.size()) - cfg.t_min);
    const long target_msteps = std::max<long>(1, budget / std::max(1, cfg.gradient_steps));
    cfg.mstep_every = std::max<long>(1, samples / target_msteps);
  }
  OnlineResult res = run_online_bw(stream, cfg, std::move(policy), setup.reg);
  if (online_log) *online_log = std::move(res.log);
  return std::move(res.policy);
}

SweepResult sweep(TrainerKind trainer, const Environment& env,
                  const std::vector<ActionId>& expert_policy, const std::vector<long>& demo_sizes,
                  const std::vector<uint64_t>& seeds, const TrainSetup& setup) {
  if (demo_sizes.empty() || seeds.empty()) throw ConfigError("sweep: sizes and seeds required");
  env.validate();

  SweepResult out;
  const auto [expert_mean, expert_std] = evaluate_expert(
      env, expert_policy, setup.demo_epsilon, setup.expert_eval_episodes, 0xE9A1ull);
  (void)expert_std;
  if (expert_mean == 0.0) throw NumericError("sweep: expert mean reward is zero");
  out.expert_mean = expert_mean;

  for (long size : demo_sizes) {
    EvalReport report;
    report.trainer = trainer;
    report.demo_size = size;
    report.n_episodes = setup.n_eval_episodes;
    std::vector<double> per_seed_means;
    for (uint64_t seed : seeds) {
      SweepCell cell;
      cell.trainer = trainer;
      cell.demo_size = size;
      cell.seed = seed;
      const double t0 = now_ms();
      try {
        const DemonstrationSet demos = generate_demonstrations(
            env, expert_policy, size, setup.demo_epsilon,
            splitmix64(seed ^ splitmix64(static_cast<uint64_t>(size))));
        const HierarchicalPolicy policy =
            train_cell(trainer, env, demos, setup, seed, nullptr, nullptr);
        const EvalResult ev =
            evaluate_policy(policy, env, setup.n_eval_episodes,
                            splitmix64(seed ^ splitmix64(static_cast<uint64_t>(size) ^ 0xEAEAull)));
        cell.mean_reward = ev.mean;
        cell.normalized_reward = ev.mean / expert_mean;
        per_seed_means.push_back(ev.mean);
      } catch (const std::exception& e) {
        cell.failed = true;
        cell.error = e.what();
      }
      cell.wall_ms = now_ms() - t0;
      report.wall_time_train += cell.wall_ms / 1000.0;
      out.cells.push_back(std::move(cell));
    }
    if (!per_seed_means.empty()) {
      double mean = 0.0;
      for (double v : per_seed_means) mean += v;
      mean /= static_cast<double>(per_seed_means.size());
      double var = 0.0;
      for (double v : per_seed_means) var += (v - mean) * (v - mean);
      var /= static_cast<double>(per_seed_means.size());  // population std over seeds
      report.mean_reward = mean;
      report.normalized_reward = mean / expert_mean;
      report.std_over_seeds = std::sqrt(var);
      report.n_seeds = static_cast<int>(per_seed_means.size());
    }
    out.reports.push_back(std::move(report));
  }
  return out;
}

}  // namespace hil
