#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hil/opgm.hpp"
#include "hil/oracle.hpp"
#include "support.hpp"

using namespace hil;
using namespace hil::testing;

namespace {

// Straight-line re-evaluation of the joint factorization, kept separate
// from the implementation under test.
double straight_line_joint(const HierarchicalPolicy& pol, const Trajectory& traj,
                           const std::vector<LatentStep>& latents) {
  double log_p = 0.0;
  OptionId prev = traj.initial_option;
  for (size_t t = 0; t < traj.steps.size(); ++t) {
    const auto [s, a] = traj.steps[t];
    const auto [o, b] = latents[t];
    const double pb = pol.eval_pi_b(s, prev)[b];
    const double ph = b == 1 ? pol.eval_pi_hi(s)[o] : (o == prev ? 1.0 : 0.0);
    const double pl = pol.eval_pi_lo(s, o)[a];
    if (pb * ph * pl == 0.0) return kNegInf;
    log_p += std::log(pb) + std::log(ph) + std::log(pl);
    prev = o;
  }
  return log_p;
}

}  // namespace

TEST_CASE("tilde_pi_hi case split") {
  Rng rng(1);
  const ModelDims dims{3, 2, 4};
  const auto pol = random_tabular_policy(rng, dims);
  CHECK(tilde_pi_hi(pol, 2, 2, 1, 0) == 1.0);
  CHECK(tilde_pi_hi(pol, 1, 2, 1, 0) == 0.0);

  const auto uniform =
      HierarchicalPolicy::zeros(ParamKind::Tabular, dims, StateTable::identity_features(3));
  CHECK(tilde_pi_hi(uniform, 3, 0, 2, 1) == doctest::Approx(0.25).epsilon(1e-12));

  CHECK_THROWS_AS(tilde_pi_hi(pol, 4, 0, 0, 1), DimensionError);
  CHECK_THROWS_AS(tilde_pi_hi(pol, 0, 0, 3, 1), DimensionError);

  // rows of the augmented policy stay normalized for both b values
  for (int trial = 0; trial < 5; ++trial) {
    const auto p = random_tabular_policy(rng, dims);
    for (int s = 0; s < dims.n_states; ++s)
      for (int op = 0; op < dims.n_options; ++op)
        for (int b = 0; b < 2; ++b) {
          double sum = 0.0;
          for (int o = 0; o < dims.n_options; ++o) sum += tilde_pi_hi(p, o, op, s, b);
          CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        }
  }
}

TEST_CASE("joint_log_prob on uniform policies") {
  const ModelDims dims{2, 2, 2};
  const auto pol =
      HierarchicalPolicy::zeros(ParamKind::Tabular, dims, StateTable::identity_features(2));
  Trajectory traj;
  traj.steps = {{0, 1}};
  traj.initial_option = 0;
  CHECK(joint_log_prob(pol, traj, {{1, 1}}) ==
        doctest::Approx(std::log(0.5 * 0.5 * 0.5)).epsilon(1e-10));
  // copying a different option without termination is impossible
  CHECK(joint_log_prob(pol, traj, {{1, 0}}) == kNegInf);
  CHECK_THROWS_AS(joint_log_prob(pol, traj, {{1, 1}, {0, 0}}), ShapeError);
}

TEST_CASE("joint_log_prob equals an independent straight-line evaluation") {
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const auto inst = oracle::random_instance(rng, 3, 3, 3, 3, 3);
    std::vector<LatentStep> latents(inst.trajectory.length());
    OptionId prev = inst.trajectory.initial_option;
    for (auto& lt : latents) {
      lt.termination = static_cast<Bit>(rng.uniform_below(2));
      lt.option = lt.termination == 1
                      ? static_cast<OptionId>(rng.uniform_below(inst.dims.n_options))
                      : prev;
      prev = lt.option;
    }
    const double expected = straight_line_joint(inst.policy, inst.trajectory, latents);
    const double got = joint_log_prob(inst.policy, inst.trajectory, latents);
    if (std::isinf(expected)) {
      CHECK(got == kNegInf);
    } else {
      CHECK(got == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("joint probabilities sum to one over latents and actions") {
  Rng rng(88);
  const ModelDims dims{3, 2, 2};
  const auto pol = random_tabular_policy(rng, dims);
  for (long T = 1; T <= 4; ++T) {
    Trajectory traj;
    traj.steps.resize(T);
    for (auto& st : traj.steps) st.state = static_cast<StateId>(rng.uniform_below(dims.n_states));
    traj.initial_option = 1;

    double total = 0.0;
    const long n_actions_seq = static_cast<long>(std::pow(dims.n_actions, T));
    const long n_latents_seq = static_cast<long>(std::pow(dims.n_options * 2, T));
    for (long ai = 0; ai < n_actions_seq; ++ai) {
      long a_rem = ai;
      for (long t = 0; t < T; ++t) {
        traj.steps[t].action = static_cast<ActionId>(a_rem % dims.n_actions);
        a_rem /= dims.n_actions;
      }
      for (long li = 0; li < n_latents_seq; ++li) {
        long l_rem = li;
        std::vector<LatentStep> latents(T);
        for (long t = 0; t < T; ++t) {
          latents[t].option = static_cast<OptionId>(l_rem % dims.n_options);
          l_rem /= dims.n_options;
          latents[t].termination = static_cast<Bit>(l_rem % 2);
          l_rem /= 2;
        }
        total += std::exp(joint_log_prob(pol, traj, latents));
      }
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("marginal_log_likelihood spec value at T=1") {
  // pi_lo = 0.5 regardless of option: marginal is log 0.5
  const ModelDims dims{1, 2, 2};
  const auto pol =
      HierarchicalPolicy::zeros(ParamKind::Tabular, dims, StateTable::identity_features(1));
  Trajectory traj;
  traj.steps = {{0, 0}};
  CHECK(marginal_log_likelihood(pol, traj) == doctest::Approx(std::log(0.5)).epsilon(1e-10));
}

TEST_CASE("marginal_log_likelihood equals brute-force enumeration") {
  Rng rng(99);
  for (int trial = 0; trial < 30; ++trial) {
    const auto inst = oracle::random_instance(rng, 2, trial % 3 == 0 ? 8 : 5, 3, 3, 3);
    const auto truth = oracle::enumerate_posteriors(inst.policy, inst.trajectory);
    CHECK(marginal_log_likelihood(inst.policy, inst.trajectory) ==
          doctest::Approx(truth.loglik).epsilon(1e-10));
  }
}

TEST_CASE("deterministic expert-consistent policy has log-likelihood zero") {
  const ModelDims dims{2, 2, 1};
  auto pol =
      HierarchicalPolicy::zeros(ParamKind::Tabular, dims, StateTable::identity_features(2));
  PolicyParams p = pol.params();
  // action 1 in state 0, action 0 in state 1, single option
  p.theta_lo[0] = -800.0;
  p.theta_lo[1] = 0.0;
  p.theta_lo[2] = 0.0;
  p.theta_lo[3] = -800.0;
  pol.set_params(std::move(p));

  Trajectory traj;
  traj.steps = {{0, 1}, {1, 0}, {0, 1}, {1, 0}};
  traj.initial_option = 0;
  CHECK(marginal_log_likelihood(pol, traj) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("rollout determinism and truncation") {
  const auto env = build_two_state_chain(1.0, 0.0, 0.9, 10);
  const ModelDims dims = env.dims(2);
  auto pol = HierarchicalPolicy::zeros(ParamKind::Tabular, dims, env.state_table);
  PolicyParams p = pol.params();
  // option 0 always keeps running and always picks action 1
  for (int s = 0; s < 2; ++s) {
    p.theta_b[(0 * 2 + s) * 2 + 0] = 800.0;
    p.theta_lo[(0 * 2 + s) * 2 + 1] = 800.0;
  }
  pol.set_params(std::move(p));

  Rng r1(1), r2(2), r3(1);
  const auto a = rollout(pol, env, 0, 0, 10, r1);
  const auto b = rollout(pol, env, 0, 0, 10, r2);
  const auto c = rollout(pol, env, 0, 0, 10, r3);
  REQUIRE(a.trajectory.steps.size() == b.trajectory.steps.size());
  for (size_t i = 0; i < a.trajectory.steps.size(); ++i) {
    CHECK(a.trajectory.steps[i].state == b.trajectory.steps[i].state);
    CHECK(a.trajectory.steps[i].action == b.trajectory.steps[i].action);
  }
  CHECK(a.total_reward == b.total_reward);
  CHECK(a.total_reward == c.total_reward);
  CHECK(a.trajectory.steps.size() == 10);  // no terminals in the chain

  SUBCASE("same seed twice is identical on a stochastic environment") {
    const auto noisy = build_two_state_chain(0.7, 0.3, 0.9, 25);
    Rng s1(42), s2(42);
    Rng init(5);
    const auto stoch =
        HierarchicalPolicy::random_init(ParamKind::Tabular, dims, noisy.state_table, init);
    const auto x = rollout(stoch, noisy, 0, 0, 25, s1);
    const auto y = rollout(stoch, noisy, 0, 0, 25, s2);
    REQUIRE(x.trajectory.steps.size() == y.trajectory.steps.size());
    for (size_t i = 0; i < x.trajectory.steps.size(); ++i) {
      CHECK(x.trajectory.steps[i].state == y.trajectory.steps[i].state);
      CHECK(x.trajectory.steps[i].action == y.trajectory.steps[i].action);
      CHECK(x.latents[i].option == y.latents[i].option);
      CHECK(x.latents[i].termination == y.latents[i].termination);
    }
  }
}

TEST_CASE("rollout truncates at terminal states") {
  GridworldSpec spec;
  spec.width = 3;
  spec.height = 1;
  spec.slip_prob = 0.0;
  spec.reward_noise_std = 0.0;
  spec.goal_cells = {{2, 0}};
  spec.start_cells = {{0, 0}};
  const auto env = build_gridworld(spec);
  const ModelDims dims = env.dims(2);
  auto pol = HierarchicalPolicy::zeros(ParamKind::Tabular, dims, env.state_table);
  PolicyParams p = pol.params();
  for (int o = 0; o < 2; ++o)
    for (int s = 0; s < 3; ++s) p.theta_lo[(o * 3 + s) * 4 + 1] = 800.0;  // always go east
  pol.set_params(std::move(p));
  Rng rng(4);
  const auto r = rollout(pol, env, 0, 0, 50, rng);
  CHECK(r.trajectory.steps.size() == 2);  // two moves reach the goal, well under the horizon
  CHECK(r.total_reward == doctest::Approx(2 * -0.01 + 1.0).epsilon(1e-12));
}

TEST_CASE("rollout termination frequency matches pi_b") {
  Rng rng(2024);
  const auto env = build_two_state_chain();
  const ModelDims dims = env.dims(2);
  const auto pol = random_tabular_policy(rng, dims);
  const double p1 = pol.eval_pi_b(0, 1)[1];

  const int n = 100000;
  int hits = 0;
  Rng sampler(31337);
  for (int i = 0; i < n; ++i) {
    const auto r = rollout(pol, env, 1, 0, 1, sampler);
    REQUIRE(r.latents.size() == 1);
    hits += r.latents[0].termination;
  }
  const double freq = static_cast<double>(hits) / n;
  const double sigma = std::sqrt(p1 * (1.0 - p1) / n);
  CHECK(std::abs(freq - p1) <= 3.0 * sigma);
}
