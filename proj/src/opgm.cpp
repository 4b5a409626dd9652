#include "hil/opgm.hpp"

#include <cmath>

namespace hil {

double tilde_pi_hi(const HierarchicalPolicy& policy, OptionId o, OptionId o_prev, StateId s,
                   Bit b) {
  const ModelDims& d = policy.dims();
  if (o < 0 || o >= d.n_options || o_prev < 0 || o_prev >= d.n_options)
    throw DimensionError("tilde_pi_hi: option out of range");
  if (s < 0 || s >= d.n_states) throw DimensionError("tilde_pi_hi: state out of range");
  if (b != 0 && b != 1) throw DimensionError("tilde_pi_hi: termination bit must be 0 or 1");
  if (b == 0) return o == o_prev ? 1.0 : 0.0;
  return policy.eval_pi_hi(s)[o];
}

double joint_log_prob(const HierarchicalPolicy& policy, const Trajectory& trajectory,
                      const std::vector<LatentStep>& latents, const Environment* transition) {
  const ModelDims& d = policy.dims();
  trajectory.validate(d);
  if (latents.size() != trajectory.steps.size())
    throw ShapeError("joint_log_prob: latent sequence length mismatch");

  double total = 0.0;
  OptionId o_prev = trajectory.initial_option;
  for (size_t t = 0; t < trajectory.steps.size(); ++t) {
    const Step& st = trajectory.steps[t];
    const LatentStep& lt = latents[t];
    if (lt.option < 0 || lt.option >= d.n_options)
      throw DimensionError("joint_log_prob: option out of range");
    if (lt.termination != 0 && lt.termination != 1)
      throw DimensionError("joint_log_prob: termination bit must be 0 or 1");

    const double pb = policy.eval_pi_b(st.state, o_prev)[lt.termination];
    const double ph = tilde_pi_hi(policy, lt.option, o_prev, st.state, lt.termination);
    const double pl = policy.eval_pi_lo(st.state, lt.option)[st.action];
    if (pb <= 0.0 || ph <= 0.0 || pl <= 0.0) return kNegInf;
    total += std::log(pb) + std::log(ph) + std::log(pl);
    o_prev = lt.option;
  }
  if (transition != nullptr) {
    for (size_t t = 0; t + 1 < trajectory.steps.size(); ++t) {
      const double p = transition->p(trajectory.steps[t].state, trajectory.steps[t].action,
                                     trajectory.steps[t + 1].state);
      if (p <= 0.0) return kNegInf;
      total += std::log(p);
    }
  }
  return total;
}

double marginal_log_likelihood(const HierarchicalPolicy& policy, const Trajectory& trajectory) {
  const ModelDims& d = policy.dims();
  trajectory.validate(d);
  const PolicyTables tab = PolicyTables::build(policy);
  const int O = d.n_options;

  // Forward over (o_t, b_t), renormalized each step; the log-normalizers
  // sum to the marginal log-likelihood.
  std::vector<double> alpha(static_cast<size_t>(O) * 2, 0.0), next(alpha.size());
  double loglik = 0.0;
  for (long t = 0; t < trajectory.length(); ++t) {
    const StateId s = trajectory.steps[t].state;
    const ActionId a = trajectory.steps[t].action;
    double norm = 0.0;
    if (t == 0) {
      const OptionId o0 = trajectory.initial_option;
      for (int o = 0; o < O; ++o) {
        const double pl = tab.pi_lo(s, o, a);
        next[o * 2 + 0] = (o == o0) ? tab.pi_b(s, o0, 0) * pl : 0.0;
        next[o * 2 + 1] = tab.pi_b(s, o0, 1) * tab.pi_hi(s, o) * pl;
        norm += next[o * 2 + 0] + next[o * 2 + 1];
      }
    } else {
      std::vector<double> abar(O, 0.0);
      for (int o = 0; o < O; ++o) abar[o] = alpha[o * 2 + 0] + alpha[o * 2 + 1];
      double term_mass = 0.0;  // sum_o' pi_b(1|s,o') abar(o')
      for (int op = 0; op < O; ++op) term_mass += tab.pi_b(s, op, 1) * abar[op];
      for (int o = 0; o < O; ++o) {
        const double pl = tab.pi_lo(s, o, a);
        next[o * 2 + 0] = tab.pi_b(s, o, 0) * abar[o] * pl;
        next[o * 2 + 1] = term_mass * tab.pi_hi(s, o) * pl;
        norm += next[o * 2 + 0] + next[o * 2 + 1];
      }
    }
    if (!(norm > 0.0)) return kNegInf;
    for (double& v : next) v /= norm;
    loglik += std::log(norm);
    std::swap(alpha, next);
  }
  return loglik;
}

RolloutResult rollout(const HierarchicalPolicy& policy, const Environment& env, OptionId o0,
                      StateId s1, int horizon, Rng& rng) {
  const ModelDims& d = policy.dims();
  if (horizon < 1) throw ConfigError("rollout: horizon must be >= 1");
  if (o0 < 0 || o0 >= d.n_options) throw DimensionError("rollout: o0 out of range");
  if (s1 < 0 || s1 >= d.n_states) throw DimensionError("rollout: s1 out of range");

  RolloutResult out;
  out.trajectory.initial_option = o0;
  OptionId o_prev = o0;
  StateId s = s1;
  for (int t = 0; t < horizon; ++t) {
    if (env.is_terminal(s)) {
      out.total_reward += env.terminal_value(s);
      break;
    }
    const auto pb = policy.eval_pi_b(s, o_prev);
    const Bit b = rng.next_double() < pb[1] ? 1 : 0;
    OptionId o = o_prev;
    if (b == 1) o = rng.categorical(policy.eval_pi_hi(s));
    const ActionId a = rng.categorical(policy.eval_pi_lo(s, o));
    out.trajectory.steps.push_back({s, a});
    out.latents.push_back({o, b});
    out.total_reward += env.sample_reward(s, a, rng);
    s = env.sample_next(s, a, rng);
    o_prev = o;
  }
  if (static_cast<long>(out.trajectory.steps.size()) == horizon && env.is_terminal(s))
    out.total_reward += env.terminal_value(s);
  return out;
}

}  // namespace hil
