#ifndef HIL_ENV_HPP
#define HIL_ENV_HPP

#include <string>
#include <utility>
#include <vector>

#include "hil/common.hpp"
#include "hil/types.hpp"

namespace hil {

// Finite MDP used for expert generation and evaluation. Rewards carry an
// optional Gaussian noise applied when sampling (the expected values feed
// value iteration); the learner itself never observes rewards.
struct Environment {
  std::string name;
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> transition;  // (s*A + a)*S + s'
  std::vector<double> reward;      // s*A + a, expected value
  double reward_noise_std = 0.0;
  std::vector<double> initial_distribution;  // over states
  std::vector<char> terminal;                // per state
  double discount = 0.99;
  int horizon = 100;
  StateTable state_table;

  double p(StateId s, ActionId a, StateId next) const {
    return transition[(static_cast<size_t>(s) * n_actions + a) * n_states + next];
  }
  double r(StateId s, ActionId a) const { return reward[static_cast<size_t>(s) * n_actions + a]; }
  bool is_terminal(StateId s) const { return terminal[s] != 0; }
  // Collected once on entering a terminal state; noise-free.
  double terminal_value(StateId s) const { return r(s, 0); }

  ModelDims dims(int n_options) const { return ModelDims{n_states, n_actions, n_options}; }

  StateId sample_initial(Rng& rng) const;
  StateId sample_next(StateId s, ActionId a, Rng& rng) const;
  double sample_reward(StateId s, ActionId a, Rng& rng) const;

  void validate() const;
};

struct GridworldSpec {
  int width = 10;
  int height = 10;
  double slip_prob = 0.2;
  double reward_noise_std = 0.5;
  std::vector<std::pair<int, int>> goal_cells = {{9, 9}};
  std::vector<std::pair<int, int>> start_cells = {{0, 0}};
  double step_reward = -0.01;
  double goal_reward = 1.0;
  double discount = 0.99;
  int horizon = 100;

  void validate() const;
};

// 4 actions (N/E/S/W): intended move with prob 1-slip, each lateral
// neighbor with slip/2, walls reflect. Goal cells are terminal. Features
// are the normalized coordinates (x/width, y/height).
Environment build_gridworld(const GridworldSpec& spec);

// Minimal two-state oracle environment: state 1 is rewarding, action 1
// attempts the 0 -> 1 move with the given success probability, and state 1
// decays back to 0 with the given probability.
Environment build_two_state_chain(double success_prob = 0.7, double decay_prob = 0.3,
                                  double discount = 0.9, int horizon = 50);

struct ValueIterationResult {
  std::vector<double> values;
  std::vector<ActionId> greedy;  // lowest-index tie break
  int sweeps = 0;
  double residual = 0.0;
};

ValueIterationResult value_iteration(const Environment& env, double tol);

// Expert trajectories plus the explored index sets.
struct DemonstrationSet {
  std::string env_name;
  int n_states = 0;
  int n_actions = 0;
  std::vector<std::vector<Step>> episodes;

  long total_steps() const;
  std::vector<StateId> explored_states() const;    // sorted, unique
  std::vector<ActionId> explored_actions() const;  // sorted, unique

  // One Trajectory per episode; every episode conditions on the same o_0.
  std::vector<Trajectory> to_trajectories(const ModelDims& dims, OptionId o0 = 0) const;
  // All episodes concatenated in order, for the online recursion.
  std::vector<Step> to_stream() const;
};

// Rolls epsilon-greedy expert episodes until at least n_steps state-action
// pairs are recorded; the final episode always completes.
DemonstrationSet generate_demonstrations(const Environment& env,
                                         const std::vector<ActionId>& expert_policy,
                                         long n_steps, double epsilon, uint64_t seed);

// Mean/std of undiscounted episodic reward for the epsilon-greedy expert.
std::pair<double, double> evaluate_expert(const Environment& env,
                                          const std::vector<ActionId>& expert_policy,
                                          double epsilon, int n_episodes, uint64_t seed);

}  // namespace hil

#endif  // HIL_ENV_HPP
