#include "hil/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "hil/batch_em.hpp"
#include "hil/online_em.hpp"
#include "hil/opgm.hpp"

namespace hil::oracle {

namespace {

struct Accumulator {
  long T;
  int O, S, A;
  const std::vector<Step>* steps;
  PolicyTables tab;

  double z = 0.0;
  std::vector<double> gamma, xi, b1, phi;
  std::vector<LatentStep> path;

  Accumulator(const HierarchicalPolicy& policy, const std::vector<Step>& s)
      : T(static_cast<long>(s.size())),
        O(policy.dims().n_options),
        S(policy.dims().n_states),
        A(policy.dims().n_actions),
        steps(&s),
        tab(PolicyTables::build(policy)) {
    gamma.assign(static_cast<size_t>(T) * O * 2, 0.0);
    xi.assign(T >= 2 ? static_cast<size_t>(T - 1) * O * 2 : 0, 0.0);
    b1.assign(2, 0.0);
    phi.assign(static_cast<size_t>(O) * 2 * O * S * A, 0.0);
    path.resize(T);
  }

  void leaf(OptionId o0, double p) {
    z += p;
    OptionId prev = o0;
    for (long t = 1; t <= T; ++t) {
      const LatentStep& lt = path[t - 1];
      const Step& st = (*steps)[t - 1];
      gamma[((t - 1) * O + lt.option) * 2 + lt.termination] += p;
      if (t >= 2) xi[((t - 2) * O + prev) * 2 + lt.termination] += p;
      if (t == 1) b1[lt.termination] += p;
      phi[(((static_cast<size_t>(prev) * 2 + lt.termination) * O + lt.option) * S + st.state) *
              A +
          st.action] += p;
      prev = lt.option;
    }
  }

  void dfs(long t, OptionId o0, OptionId o_prev, double prefix) {
    if (prefix == 0.0) return;
    if (t > T) {
      leaf(o0, prefix);
      return;
    }
    const Step& st = (*steps)[t - 1];
    for (int b = 0; b < 2; ++b) {
      const double pb = tab.pi_b(st.state, o_prev, b);
      if (pb == 0.0) continue;
      if (b == 0) {
        const double p = pb * tab.pi_lo(st.state, o_prev, st.action);
        path[t - 1] = {o_prev, 0};
        dfs(t + 1, o0, o_prev, prefix * p);
      } else {
        for (int o = 0; o < O; ++o) {
          const double p = pb * tab.pi_hi(st.state, o) * tab.pi_lo(st.state, o, st.action);
          path[t - 1] = {o, 1};
          dfs(t + 1, o0, o, prefix * p);
        }
      }
    }
  }

  EnumerationPosteriors finish() {
    EnumerationPosteriors out;
    out.T = T;
    out.n_options = O;
    out.n_states = S;
    out.n_actions = A;
    if (!(z > 0.0)) {
      out.loglik = kNegInf;
      out.gamma = gamma;
      out.xi = xi;
      out.b1 = b1;
      out.phi = phi;
      return out;
    }
    out.loglik = std::log(z);
    for (double& v : gamma) v /= z;
    for (double& v : xi) v /= z;
    for (double& v : b1) v /= z;
    for (double& v : phi) v /= z * static_cast<double>(T);
    out.gamma = std::move(gamma);
    out.xi = std::move(xi);
    out.b1 = std::move(b1);
    out.phi = std::move(phi);
    return out;
  }
};

}  // namespace

EnumerationPosteriors enumerate_posteriors(const HierarchicalPolicy& policy,
                                           const Trajectory& trajectory) {
  trajectory.validate(policy.dims());
  Accumulator acc(policy, trajectory.steps);
  acc.dfs(1, trajectory.initial_option, trajectory.initial_option, 1.0);
  return acc.finish();
}

EnumerationPosteriors enumerate_posteriors_with_prior(const HierarchicalPolicy& policy,
                                                      const std::vector<Step>& stream,
                                                      const std::vector<double>& prior) {
  if (stream.empty()) throw ShapeError("enumerate_posteriors_with_prior: empty stream");
  std::vector<double> pr = prior;
  const int O = policy.dims().n_options;
  if (pr.empty()) pr.assign(O, 1.0 / O);
  if (static_cast<int>(pr.size()) != O)
    throw ShapeError("enumerate_posteriors_with_prior: prior length mismatch");
  Accumulator acc(policy, stream);
  for (int o0 = 0; o0 < O; ++o0)
    if (pr[o0] > 0.0) acc.dfs(1, o0, o0, pr[o0]);
  return acc.finish();
}

std::vector<double> finite_difference_gradient(const HierarchicalPolicy& policy,
                                               const WeightedLogTerms& objective, double h) {
  HierarchicalPolicy probe = policy;
  std::vector<double> theta = policy.flat_params();
  std::vector<double> grad(theta.size(), 0.0);
  for (size_t i = 0; i < theta.size(); ++i) {
    const double original = theta[i];
    theta[i] = original + h;
    probe.set_flat_params(theta);
    const double up = objective_value(probe, objective);
    theta[i] = original - h;
    probe.set_flat_params(theta);
    const double down = objective_value(probe, objective);
    theta[i] = original;
    grad[i] = (up - down) / (2.0 * h);
  }
  probe.set_flat_params(theta);
  return grad;
}

RandomInstance random_instance(Rng& rng, long t_min, long t_max, int o_max, int s_max,
                               int a_max) {
  ModelDims dims;
  dims.n_options = 2 + static_cast<int>(rng.uniform_below(std::max(1, o_max - 1)));
  dims.n_states = 2 + static_cast<int>(rng.uniform_below(std::max(1, s_max - 1)));
  dims.n_actions = 2 + static_cast<int>(rng.uniform_below(std::max(1, a_max - 1)));

  PolicyParams params;
  params.kind = ParamKind::Tabular;
  params.theta_hi.resize(static_cast<size_t>(dims.n_states) * dims.n_options);
  params.theta_lo.resize(static_cast<size_t>(dims.n_options) * dims.n_states * dims.n_actions);
  params.theta_b.resize(static_cast<size_t>(dims.n_options) * dims.n_states * 2);
  for (auto* block : {&params.theta_hi, &params.theta_lo, &params.theta_b})
    for (double& v : *block) v = rng.uniform(-1.5, 1.5);

  Trajectory traj;
  const long T = t_min + static_cast<long>(rng.uniform_below(t_max - t_min + 1));
  traj.steps.resize(T);
  for (Step& st : traj.steps) {
    st.state = static_cast<StateId>(rng.uniform_below(dims.n_states));
    st.action = static_cast<ActionId>(rng.uniform_below(dims.n_actions));
  }
  traj.initial_option = static_cast<OptionId>(rng.uniform_below(dims.n_options));

  HierarchicalPolicy policy(dims, StateTable::identity_features(dims.n_states),
                            std::move(params));
  return {dims, std::move(policy), std::move(traj)};
}

std::vector<OracleCheckResult> run_oracle_suite(uint64_t seed, int n_instances) {
  Rng rng(seed);
  OracleCheckResult smoothing{"batch smoothing vs enumeration (gamma, xi)", 0.0, 1e-10, 0, false};
  OracleCheckResult streaming{"fixed-theta streaming phi vs enumeration", 0.0, 1e-10, 0, false};
  OracleCheckResult cross{"auxiliary function cross-check (online vs batch)", 0.0, 1e-9, 0, false};
  OracleCheckResult loglik{"marginal log-likelihood vs enumeration", 0.0, 1e-10, 0, false};

  for (int i = 0; i < n_instances; ++i) {
    const RandomInstance inst = random_instance(rng, 2, 8, 3, 3, 3);
    const EnumerationPosteriors truth = enumerate_posteriors(inst.policy, inst.trajectory);
    const ModelDims& d = inst.dims;

    const SmoothingTables tables = forward_backward(inst.policy, inst.trajectory);
    for (long t = 1; t <= truth.T; ++t)
      for (int o = 0; o < d.n_options; ++o)
        for (int b = 0; b < 2; ++b) {
          smoothing.max_deviation =
              std::max(smoothing.max_deviation, std::abs(tables.g(t, o, b) - truth.g(t, o, b)));
          if (t >= 2)
            smoothing.max_deviation =
                std::max(smoothing.max_deviation, std::abs(tables.x(t, o, b) - truth.x(t, o, b)));
        }
    smoothing.instances++;

    loglik.max_deviation = std::max(
        loglik.max_deviation,
        std::abs(marginal_log_likelihood(inst.policy, inst.trajectory) - truth.loglik));
    loglik.max_deviation = std::max(
        loglik.max_deviation, std::abs(tables.marginal_log_likelihood() - truth.loglik));
    loglik.instances++;

    // frozen-parameter streaming recursion, point prior at o_0
    std::vector<double> prior(d.n_options, 0.0);
    prior[inst.trajectory.initial_option] = 1.0;
    OnlineStatistics stats(d, prior);
    for (const Step& st : inst.trajectory.steps) e_step_update(stats, inst.policy, st.state, st.action);
    const PhiStatistic phi = compose_phi(stats);
    for (int op = 0; op < d.n_options; ++op)
      for (int b = 0; b < 2; ++b)
        for (int o = 0; o < d.n_options; ++o)
          for (int s = 0; s < d.n_states; ++s)
            for (int a = 0; a < d.n_actions; ++a) {
              double recursed = 0.0;
              // unexplored cells hold no statistic mass
              for (size_t sl = 0; sl < phi.slot_state.size(); ++sl)
                if (phi.slot_state[sl] == s)
                  for (size_t al = 0; al < phi.slot_action.size(); ++al)
                    if (phi.slot_action[al] == a)
                      recursed = phi.at(op, b, o, static_cast<int>(sl), static_cast<int>(al));
              streaming.max_deviation = std::max(
                  streaming.max_deviation, std::abs(recursed - truth.phi_at(op, b, o, s, a)));
            }
    streaming.instances++;

    // evaluate both auxiliary functions at independent random parameters
    Rng sub = rng.fork(0x9e3779b9u + i);
    PolicyParams theta2;
    theta2.kind = ParamKind::Tabular;
    theta2.theta_hi.resize(static_cast<size_t>(d.n_states) * d.n_options);
    theta2.theta_lo.resize(static_cast<size_t>(d.n_options) * d.n_states * d.n_actions);
    theta2.theta_b.resize(static_cast<size_t>(d.n_options) * d.n_states * 2);
    for (auto* block : {&theta2.theta_hi, &theta2.theta_lo, &theta2.theta_b})
      for (double& v : *block) v = sub.uniform(-1.5, 1.5);
    HierarchicalPolicy policy2(d, StateTable::identity_features(d.n_states), std::move(theta2));
    const double q_online = online_q(policy2, phi);
    const double q_batch = batch_q(policy2, tables, inst.trajectory, true);
    cross.max_deviation = std::max(cross.max_deviation, std::abs(q_online - q_batch));
    cross.instances++;
  }

  smoothing.pass = smoothing.max_deviation < smoothing.tolerance;
  streaming.pass = streaming.max_deviation < streaming.tolerance;
  cross.pass = cross.max_deviation < cross.tolerance;
  loglik.pass = loglik.max_deviation < loglik.tolerance;
  return {smoothing, streaming, cross, loglik};
}

}  // namespace hil::oracle
