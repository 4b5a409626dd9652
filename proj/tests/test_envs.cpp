#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "hil/env.hpp"

using namespace hil;

TEST_CASE("gridworld transition rows are stochastic") {
  GridworldSpec spec;
  const auto env = build_gridworld(spec);
  CHECK(env.n_states == 100);
  CHECK(env.n_actions == 4);
  for (int s = 0; s < env.n_states; ++s)
    for (int a = 0; a < env.n_actions; ++a) {
      double sum = 0.0;
      for (int nxt = 0; nxt < env.n_states; ++nxt) sum += env.p(s, a, nxt);
      CHECK(std::abs(sum - 1.0) < 1e-12);
    }
}

TEST_CASE("slip-free gridworld is deterministic") {
  GridworldSpec spec;
  spec.slip_prob = 0.0;
  const auto env = build_gridworld(spec);
  for (int s = 0; s < env.n_states; ++s)
    for (int a = 0; a < env.n_actions; ++a) {
      int ones = 0;
      for (int nxt = 0; nxt < env.n_states; ++nxt)
        if (env.p(s, a, nxt) == 1.0) ++ones;
      CHECK(ones == 1);
    }
}

TEST_CASE("two-cell gridworld value iteration matches the hand Bellman value") {
  GridworldSpec spec;
  spec.width = 2;
  spec.height = 1;
  spec.slip_prob = 0.0;
  spec.reward_noise_std = 0.0;
  spec.goal_cells = {{1, 0}};
  spec.start_cells = {{0, 0}};
  spec.discount = 0.99;
  const auto env = build_gridworld(spec);
  const auto vi = value_iteration(env, 1e-10);
  CHECK(vi.values[0] == doctest::Approx(-0.01 + 0.99 * 1.0).epsilon(1e-9));
  CHECK(vi.values[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(vi.greedy[0] == 1);  // east
}

TEST_CASE("two-state chain fixed point") {
  const auto env = build_two_state_chain();
  CHECK(env.n_states == 2);
  CHECK(env.n_actions == 2);
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 2; ++a) {
      double sum = 0.0;
      for (int nxt = 0; nxt < 2; ++nxt) sum += env.p(s, a, nxt);
      CHECK(std::abs(sum - 1.0) < 1e-12);
    }

  SUBCASE("absorbing variant solves to the geometric series") {
    const auto abs_env = build_two_state_chain(1.0, 0.0, 0.9, 50);
    const auto vi = value_iteration(abs_env, 1e-8);
    CHECK(vi.values[1] == doctest::Approx(10.0).epsilon(1e-6));
    CHECK(vi.values[0] == doctest::Approx(9.0).epsilon(1e-6));
    CHECK(vi.greedy[0] == 1);
  }
}

TEST_CASE("value iteration properties") {
  SUBCASE("zero rewards give zero values") {
    GridworldSpec spec;
    spec.width = 3;
    spec.height = 3;
    spec.step_reward = 0.0;
    spec.goal_reward = 0.0;
    spec.reward_noise_std = 0.0;
    spec.goal_cells = {{2, 2}};
    const auto env = build_gridworld(spec);
    const auto vi = value_iteration(env, 1e-10);
    for (double v : vi.values) CHECK(std::abs(v) < 1e-9);
  }

  SUBCASE("one extra backup moves the output less than tol") {
    const auto env = build_two_state_chain();
    const double tol = 1e-8;
    const auto vi = value_iteration(env, tol);
    for (int s = 0; s < env.n_states; ++s) {
      double best = -1e300;
      for (int a = 0; a < env.n_actions; ++a) {
        double q = env.r(s, a);
        for (int nxt = 0; nxt < env.n_states; ++nxt)
          q += env.discount * env.p(s, a, nxt) * vi.values[nxt];
        best = std::max(best, q);
      }
      CHECK(std::abs(best - vi.values[s]) < tol);
    }
  }

  SUBCASE("residual contracts at rate gamma") {
    const auto env = build_two_state_chain();
    // run a plain Bellman sweep loop and track residuals
    std::vector<double> v(env.n_states, 0.0), next(env.n_states, 0.0);
    std::vector<double> residuals;
    for (int sweep = 0; sweep < 40; ++sweep) {
      double res = 0.0;
      for (int s = 0; s < env.n_states; ++s) {
        double best = -1e300;
        for (int a = 0; a < env.n_actions; ++a) {
          double q = env.r(s, a);
          for (int nxt = 0; nxt < env.n_states; ++nxt)
            q += env.discount * env.p(s, a, nxt) * v[nxt];
          best = std::max(best, q);
        }
        next[s] = best;
        res = std::max(res, std::abs(next[s] - v[s]));
      }
      std::swap(v, next);
      residuals.push_back(res);
    }
    for (size_t k = 10; k < residuals.size(); ++k)
      CHECK(residuals[k] <= env.discount * residuals[k - 1] * (1.0 + 1e-9) + 1e-300);
  }

  CHECK_THROWS_AS(value_iteration(build_two_state_chain(), -1.0), ConfigError);
}

TEST_CASE("demonstration generation") {
  GridworldSpec spec;
  const auto env = build_gridworld(spec);
  const auto vi = value_iteration(env, 1e-8);

  SUBCASE("step-count overshoot stays within one episode") {
    const auto demos = generate_demonstrations(env, vi.greedy, 1000, 0.05, 7);
    CHECK(demos.total_steps() >= 1000);
    CHECK(demos.total_steps() < 1000 + env.horizon);
    CHECK(demos.n_states == env.n_states);
  }

  SUBCASE("deterministic per seed") {
    const auto a = generate_demonstrations(env, vi.greedy, 500, 0.05, 11);
    const auto b = generate_demonstrations(env, vi.greedy, 500, 0.05, 11);
    REQUIRE(a.episodes.size() == b.episodes.size());
    for (size_t e = 0; e < a.episodes.size(); ++e) {
      REQUIRE(a.episodes[e].size() == b.episodes[e].size());
      for (size_t t = 0; t < a.episodes[e].size(); ++t) {
        CHECK(a.episodes[e][t].state == b.episodes[e][t].state);
        CHECK(a.episodes[e][t].action == b.episodes[e][t].action);
      }
    }
  }

  SUBCASE("every recorded transition is possible under the kernel") {
    const auto demos = generate_demonstrations(env, vi.greedy, 2000, 0.05, 3);
    for (const auto& ep : demos.episodes)
      for (size_t t = 0; t + 1 < ep.size(); ++t)
        CHECK(env.p(ep[t].state, ep[t].action, ep[t + 1].state) > 0.0);
  }

  SUBCASE("epsilon-greedy action frequencies within 3 sigma") {
    // repeated single-step visits to the same start state
    GridworldSpec tiny;
    tiny.width = 3;
    tiny.height = 1;
    tiny.slip_prob = 0.0;
    tiny.reward_noise_std = 0.0;
    tiny.goal_cells = {{2, 0}};
    tiny.start_cells = {{0, 0}};
    tiny.horizon = 1;
    const auto env1 = build_gridworld(tiny);
    const auto g = value_iteration(env1, 1e-8).greedy;
    const double eps = 0.2;
    const long n = 100000;
    const auto demos = generate_demonstrations(env1, g, n, eps, 99);
    long greedy_hits = 0, total = 0;
    for (const auto& ep : demos.episodes)
      for (const auto& st : ep)
        if (st.state == 0) {
          ++total;
          greedy_hits += st.action == g[0] ? 1 : 0;
        }
    const double p = (1.0 - eps) + eps / env1.n_actions;
    const double freq = static_cast<double>(greedy_hits) / static_cast<double>(total);
    const double sigma = std::sqrt(p * (1.0 - p) / static_cast<double>(total));
    CHECK(std::abs(freq - p) <= 3.0 * sigma);
  }
}

TEST_CASE("expert with zero epsilon on a deterministic world repeats episodes") {
  GridworldSpec spec;
  spec.slip_prob = 0.0;
  spec.reward_noise_std = 0.0;
  const auto env = build_gridworld(spec);
  const auto vi = value_iteration(env, 1e-8);
  const auto demos = generate_demonstrations(env, vi.greedy, 200, 0.0, 1);
  REQUIRE(demos.episodes.size() >= 2);
  for (size_t e = 1; e < demos.episodes.size(); ++e) {
    REQUIRE(demos.episodes[e].size() == demos.episodes[0].size());
    for (size_t t = 0; t < demos.episodes[e].size(); ++t) {
      CHECK(demos.episodes[e][t].state == demos.episodes[0][t].state);
      CHECK(demos.episodes[e][t].action == demos.episodes[0][t].action);
    }
  }
}

TEST_CASE("spec validation rejects bad geometry") {
  GridworldSpec spec;
  spec.goal_cells = {{12, 0}};
  CHECK_THROWS_AS(build_gridworld(spec), ConfigError);
  GridworldSpec overlap;
  overlap.start_cells = {{9, 9}};
  CHECK_THROWS_AS(build_gridworld(overlap), ConfigError);
  GridworldSpec slip;
  slip.slip_prob = 1.0;
  CHECK_THROWS_AS(build_gridworld(slip), ConfigError);
}
