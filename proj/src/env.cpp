#include "hil/env.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace hil {

StateId Environment::sample_initial(Rng& rng) const { return rng.categorical(initial_distribution); }

StateId Environment::sample_next(StateId s, ActionId a, Rng& rng) const {
  const double* row = transition.data() + (static_cast<size_t>(s) * n_actions + a) * n_states;
  double u = rng.next_double();
  double acc = 0.0;
  for (int next = 0; next < n_states; ++next) {
    acc += row[next];
    if (u < acc) return next;
  }
  return n_states - 1;
}

double Environment::sample_reward(StateId s, ActionId a, Rng& rng) const {
  double value = r(s, a);
  if (reward_noise_std > 0.0) value += reward_noise_std * rng.normal();
  return value;
}

void Environment::validate() const {
  if (n_states < 1 || n_actions < 1) throw ModelError("Environment: empty state or action set");
  if (static_cast<long>(transition.size()) !=
      static_cast<long>(n_states) * n_actions * n_states)
    throw ModelError("Environment: transition tensor size mismatch");
  if (static_cast<long>(reward.size()) != static_cast<long>(n_states) * n_actions)
    throw ModelError("Environment: reward table size mismatch");
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      double sum = 0.0;
      const double* row = transition.data() + (static_cast<size_t>(s) * n_actions + a) * n_states;
      for (int nxt = 0; nxt < n_states; ++nxt) {
        if (row[nxt] < 0.0) throw ModelError("Environment: negative transition probability");
        sum += row[nxt];
      }
      if (std::abs(sum - 1.0) > 1e-12)
        throw ModelError("Environment: transition row does not sum to 1");
    }
  }
  double init_sum = 0.0;
  for (double v : initial_distribution) init_sum += v;
  if (std::abs(init_sum - 1.0) > 1e-12)
    throw ModelError("Environment: initial distribution does not sum to 1");
  if (!(discount > 0.0 && discount < 1.0)) throw ModelError("Environment: discount must be in (0,1)");
  if (horizon < 1) throw ModelError("Environment: horizon must be >= 1");
}

void GridworldSpec::validate() const {
  if (width < 1 || height < 1) throw ConfigError("GridworldSpec: degenerate grid");
  if (!(slip_prob >= 0.0 && slip_prob < 1.0))
    throw ConfigError("GridworldSpec: slip_prob must be in [0,1)");
  if (reward_noise_std < 0.0) throw ConfigError("GridworldSpec: negative reward noise");
  if (goal_cells.empty()) throw ConfigError("GridworldSpec: at least one goal cell required");
  if (start_cells.empty()) throw ConfigError("GridworldSpec: at least one start cell required");
  auto in_bounds = [&](const std::pair<int, int>& c) {
    return c.first >= 0 && c.first < width && c.second >= 0 && c.second < height;
  };
  for (const auto& c : goal_cells)
    if (!in_bounds(c)) throw ConfigError("GridworldSpec: goal cell out of bounds");
  for (const auto& c : start_cells) {
    if (!in_bounds(c)) throw ConfigError("GridworldSpec: start cell out of bounds");
    if (std::find(goal_cells.begin(), goal_cells.end(), c) != goal_cells.end())
      throw ConfigError("GridworldSpec: start cell coincides with a goal");
  }
  if (!(discount > 0.0 && discount < 1.0)) throw ConfigError("GridworldSpec: discount in (0,1)");
  if (horizon < 1) throw ConfigError("GridworldSpec: horizon must be >= 1");
}

Environment build_gridworld(const GridworldSpec& spec) {
  spec.validate();
  Environment env;
  env.name = "gridworld";
  env.n_states = spec.width * spec.height;
  env.n_actions = 4;  // N, E, S, W
  env.discount = spec.discount;
  env.horizon = spec.horizon;
  env.reward_noise_std = spec.reward_noise_std;
  env.transition.assign(static_cast<size_t>(env.n_states) * 4 * env.n_states, 0.0);
  env.reward.assign(static_cast<size_t>(env.n_states) * 4, spec.step_reward);
  env.terminal.assign(env.n_states, 0);
  env.initial_distribution.assign(env.n_states, 0.0);

  auto id = [&](int x, int y) { return y * spec.width + x; };
  for (const auto& g : spec.goal_cells) {
    const int s = id(g.first, g.second);
    env.terminal[s] = 1;
    for (int a = 0; a < 4; ++a) env.reward[static_cast<size_t>(s) * 4 + a] = spec.goal_reward;
  }
  for (const auto& c : spec.start_cells)
    env.initial_distribution[id(c.first, c.second)] += 1.0 / spec.start_cells.size();

  const int dx[4] = {0, 1, 0, -1};
  const int dy[4] = {-1, 0, 1, 0};
  auto move = [&](int x, int y, int dir) {
    int nx = x + dx[dir], ny = y + dy[dir];
    if (nx < 0 || nx >= spec.width || ny < 0 || ny >= spec.height) return id(x, y);  // reflect
    return id(nx, ny);
  };
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      const int s = id(x, y);
      for (int a = 0; a < 4; ++a) {
        double* row = env.transition.data() + (static_cast<size_t>(s) * 4 + a) * env.n_states;
        if (env.terminal[s]) {
          row[s] = 1.0;  // absorbing; rollouts never leave a terminal
          continue;
        }
        row[move(x, y, a)] += 1.0 - spec.slip_prob;
        row[move(x, y, (a + 1) % 4)] += spec.slip_prob / 2.0;  // lateral slips
        row[move(x, y, (a + 3) % 4)] += spec.slip_prob / 2.0;
      }
    }
  }

  env.state_table.feature_dim = 2;
  env.state_table.features.resize(static_cast<size_t>(env.n_states) * 2);
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      env.state_table.features[static_cast<size_t>(id(x, y)) * 2 + 0] =
          static_cast<double>(x) / spec.width;
      env.state_table.features[static_cast<size_t>(id(x, y)) * 2 + 1] =
          static_cast<double>(y) / spec.height;
    }
  }
  env.validate();
  return env;
}

Environment build_two_state_chain(double success_prob, double decay_prob, double discount,
                                  int horizon) {
  if (!(success_prob >= 0.0 && success_prob <= 1.0) || !(decay_prob >= 0.0 && decay_prob <= 1.0))
    throw ConfigError("build_two_state_chain: probabilities must be in [0,1]");
  Environment env;
  env.name = "two_state_chain";
  env.n_states = 2;
  env.n_actions = 2;
  env.discount = discount;
  env.horizon = horizon;
  env.transition.assign(2 * 2 * 2, 0.0);
  env.reward = {0.0, 0.0, 1.0, 1.0};  // state 1 rewarding under both actions
  env.terminal.assign(2, 0);
  env.initial_distribution = {1.0, 0.0};

  auto row = [&](StateId s, ActionId a) {
    return env.transition.data() + (static_cast<size_t>(s) * 2 + a) * 2;
  };
  row(0, 0)[0] = 1.0;  // action 0 stays put
  row(0, 1)[1] = success_prob;
  row(0, 1)[0] = 1.0 - success_prob;
  for (int a = 0; a < 2; ++a) {
    row(1, a)[0] = decay_prob;
    row(1, a)[1] = 1.0 - decay_prob;
  }

  env.state_table.feature_dim = 1;
  env.state_table.features = {0.0, 1.0};
  env.validate();
  return env;
}

ValueIterationResult value_iteration(const Environment& env, double tol) {
  if (!(tol > 0.0)) throw ConfigError("value_iteration: tol must be positive");
  env.validate();
  ValueIterationResult out;
  out.values.assign(env.n_states, 0.0);
  for (int s = 0; s < env.n_states; ++s)
    if (env.is_terminal(s)) out.values[s] = env.terminal_value(s);

  std::vector<double> next(env.n_states, 0.0);
  const int max_sweeps = 1000000;
  for (out.sweeps = 0; out.sweeps < max_sweeps; ++out.sweeps) {
    double residual = 0.0;
    for (int s = 0; s < env.n_states; ++s) {
      if (env.is_terminal(s)) {
        next[s] = out.values[s];
        continue;
      }
      double best = kNegInf;
      for (int a = 0; a < env.n_actions; ++a) {
        double q = env.r(s, a);
        const double* row =
            env.transition.data() + (static_cast<size_t>(s) * env.n_actions + a) * env.n_states;
        for (int nxt = 0; nxt < env.n_states; ++nxt)
          if (row[nxt] > 0.0) q += env.discount * row[nxt] * out.values[nxt];
        best = std::max(best, q);
      }
      next[s] = best;
      residual = std::max(residual, std::abs(next[s] - out.values[s]));
    }
    std::swap(out.values, next);
    out.residual = residual;
    if (residual < tol) break;
  }

  out.greedy.assign(env.n_states, 0);
  for (int s = 0; s < env.n_states; ++s) {
    if (env.is_terminal(s)) continue;
    double best = kNegInf;
    for (int a = 0; a < env.n_actions; ++a) {
      double q = env.r(s, a);
      const double* row =
          env.transition.data() + (static_cast<size_t>(s) * env.n_actions + a) * env.n_states;
      for (int nxt = 0; nxt < env.n_states; ++nxt)
        if (row[nxt] > 0.0) q += env.discount * row[nxt] * out.values[nxt];
      if (q > best) {
        best = q;
        out.greedy[s] = a;
      }
    }
  }
  return out;
}

long DemonstrationSet::total_steps() const {
  long total = 0;
  for (const auto& ep : episodes) total += static_cast<long>(ep.size());
  return total;
}

std::vector<StateId> DemonstrationSet::explored_states() const {
  std::set<StateId> seen;
  for (const auto& ep : episodes)
    for (const Step& st : ep) seen.insert(st.state);
  return std::vector<StateId>(seen.begin(), seen.end());
}

std::vector<ActionId> DemonstrationSet::explored_actions() const {
  std::set<ActionId> seen;
  for (const auto& ep : episodes)
    for (const Step& st : ep) seen.insert(st.action);
  return std::vector<ActionId>(seen.begin(), seen.end());
}

std::vector<Trajectory> DemonstrationSet::to_trajectories(const ModelDims& dims,
                                                          OptionId o0) const {
  std::vector<Trajectory> out;
  out.reserve(episodes.size());
  for (size_t i = 0; i < episodes.size(); ++i) {
    Trajectory t;
    t.steps = episodes[i];
    t.initial_option = o0;
    t.episode_id = static_cast<long>(i);
    t.validate(dims);
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<Step> DemonstrationSet::to_stream() const {
  std::vector<Step> out;
  out.reserve(total_steps());
  for (const auto& ep : episodes) out.insert(out.end(), ep.begin(), ep.end());
  return out;
}

DemonstrationSet generate_demonstrations(const Environment& env,
                                         const std::vector<ActionId>& expert_policy,
                                         long n_steps, double epsilon, uint64_t seed) {
  if (static_cast<int>(expert_policy.size()) != env.n_states)
    throw ShapeError("generate_demonstrations: expert policy size mismatch");
  if (!(epsilon >= 0.0 && epsilon <= 1.0))
    throw ConfigError("generate_demonstrations: epsilon must be in [0,1]");
  if (n_steps < 1) throw ConfigError("generate_demonstrations: n_steps must be >= 1");

  Rng rng(seed);
  DemonstrationSet out;
  out.env_name = env.name;
  out.n_states = env.n_states;
  out.n_actions = env.n_actions;

  long collected = 0;
  while (collected < n_steps) {
    std::vector<Step> episode;
    StateId s = env.sample_initial(rng);
    for (int t = 0; t < env.horizon; ++t) {
      if (env.is_terminal(s)) break;
      ActionId a = expert_policy[s];
      if (epsilon > 0.0 && rng.next_double() < epsilon)
        a = static_cast<ActionId>(rng.uniform_below(env.n_actions));
      episode.push_back({s, a});
      s = env.sample_next(s, a, rng);
    }
    if (episode.empty()) continue;  // started on a terminal state
    collected += static_cast<long>(episode.size());
    out.episodes.push_back(std::move(episode));
  }
  return out;
}

std::pair<double, double> evaluate_expert(const Environment& env,
                                          const std::vector<ActionId>& expert_policy,
                                          double epsilon, int n_episodes, uint64_t seed) {
  if (n_episodes < 1) throw ConfigError("evaluate_expert: n_episodes must be >= 1");
  Rng rng(seed);
  double sum = 0.0, sumsq = 0.0;
  for (int e = 0; e < n_episodes; ++e) {
    double total = 0.0;
    StateId s = env.sample_initial(rng);
    bool collected_terminal = false;
    for (int t = 0; t < env.horizon; ++t) {
      if (env.is_terminal(s)) {
        total += env.terminal_value(s);
        collected_terminal = true;
        break;
      }
      ActionId a = expert_policy[s];
      if (epsilon > 0.0 && rng.next_double() < epsilon)
        a = static_cast<ActionId>(rng.uniform_below(env.n_actions));
      total += env.sample_reward(s, a, rng);
      s = env.sample_next(s, a, rng);
    }
    // terminal reached exactly on the last step of the budget
    if (!collected_terminal && env.is_terminal(s)) total += env.terminal_value(s);
    sum += total;
    sumsq += total * total;
  }
  const double mean = sum / n_episodes;
  const double var = std::max(0.0, sumsq / n_episodes - mean * mean);
  return {mean, std::sqrt(var)};
}

}  // namespace hil
