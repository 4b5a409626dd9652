#include "hil/batch_em.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "hil/opgm.hpp"

namespace hil {

namespace {

constexpr double kLogitFloor = 1e-30;  // closed-form M-step probability floor

double now_ms() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

}  // namespace

void BatchConfig::validate() const {
  if (n_iterations < 1) throw ConfigError("BatchConfig: n_iterations must be >= 1");
  if (mstep == MStepKind::Gradient) {
    if (gradient_steps < 1) throw ConfigError("BatchConfig: gradient_steps must be >= 1");
    if (minibatch < 1) throw ConfigError("BatchConfig: minibatch must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("BatchConfig: learning_rate must be > 0");
  }
}

double SmoothingTables::marginal_log_likelihood() const {
  return std::accumulate(log_normalizers.begin(), log_normalizers.end(), 0.0);
}

SmoothingTables forward_backward(const HierarchicalPolicy& policy, const Trajectory& trajectory) {
  return forward_backward(PolicyTables::build(policy), trajectory);
}

SmoothingTables forward_backward(const PolicyTables& tab, const Trajectory& trajectory) {
  SmoothingTables st;
  forward_backward_into(st, tab, trajectory);
  return st;
}

void forward_backward_into(SmoothingTables& st, const PolicyTables& tab,
                           const Trajectory& trajectory) {
  const long T = trajectory.length();
  if (T < 2) throw ShapeError("forward_backward: trajectory length must be >= 2");
  const int O = tab.n_options;

  st.T = T;
  st.n_options = O;
  st.alpha.resize(static_cast<size_t>(T) * O * 2);
  st.beta.resize(static_cast<size_t>(T) * O * 2);
  st.gamma.resize(static_cast<size_t>(T) * O * 2);
  st.xi.resize(static_cast<size_t>(T - 1) * O * 2);
  st.log_normalizers.resize(T);

  auto at = [O](std::vector<double>& v, long t, int o, int b) -> double& {
    return v[((t - 1) * O + o) * 2 + b];
  };

  // forward
  for (long t = 1; t <= T; ++t) {
    const StateId s = trajectory.steps[t - 1].state;
    const ActionId a = trajectory.steps[t - 1].action;
    double norm = 0.0;
    if (t == 1) {
      const OptionId o0 = trajectory.initial_option;
      for (int o = 0; o < O; ++o) {
        const double pl = tab.pi_lo(s, o, a);
        at(st.alpha, 1, o, 0) = (o == o0) ? tab.pi_b(s, o0, 0) * pl : 0.0;
        at(st.alpha, 1, o, 1) = tab.pi_b(s, o0, 1) * tab.pi_hi(s, o) * pl;
        norm += at(st.alpha, 1, o, 0) + at(st.alpha, 1, o, 1);
      }
    } else {
      double term_mass = 0.0;  // sum_o' pi_b(1|s_t,o') abar_{t-1}(o')
      for (int op = 0; op < O; ++op) {
        const double abar = at(st.alpha, t - 1, op, 0) + at(st.alpha, t - 1, op, 1);
        term_mass += tab.pi_b(s, op, 1) * abar;
      }
      for (int o = 0; o < O; ++o) {
        const double pl = tab.pi_lo(s, o, a);
        const double abar_o = at(st.alpha, t - 1, o, 0) + at(st.alpha, t - 1, o, 1);
        at(st.alpha, t, o, 0) = tab.pi_b(s, o, 0) * abar_o * pl;
        at(st.alpha, t, o, 1) = term_mass * tab.pi_hi(s, o) * pl;
        norm += at(st.alpha, t, o, 0) + at(st.alpha, t, o, 1);
      }
    }
    if (!(norm > 0.0))
      throw DegenerateDataError(
          "forward_backward: observed action has probability zero at step " + std::to_string(t),
          t);
    for (int o = 0; o < O; ++o) {
      at(st.alpha, t, o, 0) /= norm;
      at(st.alpha, t, o, 1) /= norm;
    }
    st.log_normalizers[t - 1] = std::log(norm);
  }

  // Backward pass fused with the smoothed marginals: beta_t depends on the
  // future only through o_t, so both termination slots hold the same value.
  for (int o = 0; o < O; ++o) {
    at(st.beta, T, o, 0) = 1.0 / (2.0 * O);
    at(st.beta, T, o, 1) = 1.0 / (2.0 * O);
  }
  for (long t = T; t >= 1; --t) {
    if (t < T) {
      const StateId s = trajectory.steps[t].state;  // s_{t+1}
      const ActionId a = trajectory.steps[t].action;
      double term_future = 0.0;  // sum_o'' pi_hi(o''|s) pi_lo(a|s,o'') beta_{t+1}(o'',1)
      for (int on = 0; on < O; ++on)
        term_future += tab.pi_hi(s, on) * tab.pi_lo(s, on, a) * at(st.beta, t + 1, on, 1);
      double norm = 0.0;
      for (int o = 0; o < O; ++o) {
        const double cont = tab.pi_b(s, o, 0) * tab.pi_lo(s, o, a) * at(st.beta, t + 1, o, 0);
        const double term = tab.pi_b(s, o, 1) * term_future;
        const double value = cont + term;
        at(st.beta, t, o, 0) = value;
        at(st.beta, t, o, 1) = value;
        norm += 2.0 * value;
      }
      if (!(norm > 0.0))
        throw DegenerateDataError(
            "forward_backward: zero backward normalizer at step " + std::to_string(t), t);
      for (int o = 0; o < O; ++o) {
        at(st.beta, t, o, 0) /= norm;
        at(st.beta, t, o, 1) /= norm;
      }
    }

    // gamma_t from alpha_t and beta_t
    {
      double norm = 0.0;
      for (int o = 0; o < O; ++o)
        for (int b = 0; b < 2; ++b) {
          at(st.gamma, t, o, b) = at(st.alpha, t, o, b) * at(st.beta, t, o, b);
          norm += at(st.gamma, t, o, b);
        }
      if (!(norm > 0.0))
        throw DegenerateDataError(
            "forward_backward: zero smoothing normalizer at step " + std::to_string(t), t);
      for (int o = 0; o < O; ++o)
        for (int b = 0; b < 2; ++b) at(st.gamma, t, o, b) /= norm;
    }

    // bi-variate smoothing xi_t(o_{t-1}, b_t) for t in [2, T]
    if (t >= 2) {
      const StateId s = trajectory.steps[t - 1].state;
      const ActionId a = trajectory.steps[t - 1].action;
      double norm = 0.0;
      // b = 1: new option drawn from pi_hi, shared across rows
      double inner1 = 0.0;
      for (int on = 0; on < O; ++on)
        inner1 += tab.pi_hi(s, on) * tab.pi_lo(s, on, a) * at(st.beta, t, on, 1);
      for (int op = 0; op < O; ++op) {
        const double abar = at(st.alpha, t - 1, op, 0) + at(st.alpha, t - 1, op, 1);
        // b = 0: option continues as op
        const double inner0 = tab.pi_lo(s, op, a) * at(st.beta, t, op, 0);
        st.xi[((t - 2) * O + op) * 2 + 0] = abar * tab.pi_b(s, op, 0) * inner0;
        st.xi[((t - 2) * O + op) * 2 + 1] = abar * tab.pi_b(s, op, 1) * inner1;
        norm += st.xi[((t - 2) * O + op) * 2 + 0] + st.xi[((t - 2) * O + op) * 2 + 1];
      }
      if (!(norm > 0.0))
        throw DegenerateDataError(
            "forward_backward: zero bi-variate normalizer at step " + std::to_string(t), t);
      for (int op = 0; op < O; ++op)
        for (int b = 0; b < 2; ++b) st.xi[((t - 2) * O + op) * 2 + b] /= norm;
    }
  }
}

namespace {

// q-value contribution of one trajectory, unnormalized (no 1/T).
double q_unnormalized(const HierarchicalPolicy& policy, const SmoothingTables& st,
                      const Trajectory& traj, bool include_initial) {
  const int O = st.n_options;
  double total = 0.0;
  auto add = [&total](double w, double p) {
    if (w == 0.0) return true;  // 0 log 0 = 0
    if (p <= 0.0) {
      total = kNegInf;
      return false;
    }
    total += w * std::log(p);
    return true;
  };

  for (long t = 1; t <= st.T; ++t) {
    const StateId s = traj.steps[t - 1].state;
    const ActionId a = traj.steps[t - 1].action;
    const auto pi_hi = policy.eval_pi_hi(s);
    for (int o = 0; o < O; ++o) {
      const auto pi_lo = policy.eval_pi_lo(s, o);
      const double w_lo = st.g(t, o, 0) + st.g(t, o, 1);
      if (!add(w_lo, pi_lo[a])) return kNegInf;
      if (!add(st.g(t, o, 1), pi_hi[o])) return kNegInf;
    }
    if (t >= 2) {
      for (int op = 0; op < O; ++op) {
        const auto pi_b = policy.eval_pi_b(s, op);
        if (!add(st.x(t, op, 0), pi_b[0])) return kNegInf;
        if (!add(st.x(t, op, 1), pi_b[1])) return kNegInf;
      }
    }
  }
  if (include_initial) {
    const StateId s1 = traj.steps[0].state;
    const auto pi_b = policy.eval_pi_b(s1, traj.initial_option);
    for (int b = 0; b < 2; ++b) {
      double w = 0.0;  // P(B_1 = b | data) = sum_o gamma_1(o, b)
      for (int o = 0; o < O; ++o) w += st.g(1, o, b);
      if (!add(w, pi_b[b])) return kNegInf;
    }
  }
  return total;
}

}  // namespace

double batch_q(const HierarchicalPolicy& policy_new, const SmoothingTables& tables,
               const Trajectory& trajectory, bool include_initial_termination) {
  return q_unnormalized(policy_new, tables, trajectory, include_initial_termination) /
         static_cast<double>(tables.T);
}

double batch_q_total(const HierarchicalPolicy& policy_new,
                     const std::vector<SmoothingTables>& tables,
                     const std::vector<Trajectory>& trajectories,
                     bool include_initial_termination) {
  if (tables.size() != trajectories.size())
    throw ShapeError("batch_q_total: tables/trajectories size mismatch");
  double total = 0.0;
  long steps = 0;
  for (size_t i = 0; i < tables.size(); ++i) {
    total += q_unnormalized(policy_new, tables[i], trajectories[i], include_initial_termination);
    steps += tables[i].T;
  }
  return total / static_cast<double>(steps);
}

void append_batch_terms(WeightedLogTerms& out, const SmoothingTables& st, const Trajectory& traj,
                        const ModelDims& dims, long t, double scale) {
  const int O = st.n_options;
  const StateId s = traj.steps[t - 1].state;
  const ActionId a = traj.steps[t - 1].action;

  LogTermGroup hi;
  hi.head = Head::Hi;
  hi.s = s;
  hi.weights.assign(O, 0.0);
  for (int o = 0; o < O; ++o) hi.weights[o] = scale * st.g(t, o, 1);
  out.groups.push_back(std::move(hi));

  for (int o = 0; o < O; ++o) {
    LogTermGroup lo;
    lo.head = Head::Lo;
    lo.s = s;
    lo.opt = o;
    lo.weights.assign(dims.n_actions, 0.0);  // weight only on the demonstrated action
    lo.weights[a] = scale * (st.g(t, o, 0) + st.g(t, o, 1));
    out.groups.push_back(std::move(lo));
  }

  if (t >= 2) {
    for (int op = 0; op < O; ++op) {
      LogTermGroup tb;
      tb.head = Head::B;
      tb.s = s;
      tb.opt = op;
      tb.weights = {scale * st.x(t, op, 0), scale * st.x(t, op, 1)};
      out.groups.push_back(std::move(tb));
    }
  }
}

PolicyParams tabular_m_step(const std::vector<SmoothingTables>& tables,
                            const std::vector<Trajectory>& trajectories,
                            const HierarchicalPolicy& previous, bool include_initial_termination) {
  if (previous.kind() != ParamKind::Tabular)
    throw ConfigError("tabular_m_step: policy must be tabular");
  if (tables.size() != trajectories.size())
    throw ShapeError("tabular_m_step: tables/trajectories size mismatch");
  const ModelDims& d = previous.dims();
  const int S = d.n_states, A = d.n_actions, O = d.n_options;

  std::vector<double> c_hi(static_cast<size_t>(S) * O, 0.0);
  std::vector<double> c_lo(static_cast<size_t>(O) * S * A, 0.0);
  std::vector<double> c_b(static_cast<size_t>(O) * S * 2, 0.0);

  for (size_t i = 0; i < tables.size(); ++i) {
    const SmoothingTables& st = tables[i];
    const Trajectory& traj = trajectories[i];
    for (long t = 1; t <= st.T; ++t) {
      const StateId s = traj.steps[t - 1].state;
      const ActionId a = traj.steps[t - 1].action;
      for (int o = 0; o < O; ++o) {
        c_hi[static_cast<size_t>(s) * O + o] += st.g(t, o, 1);
        c_lo[(static_cast<size_t>(o) * S + s) * A + a] += st.g(t, o, 0) + st.g(t, o, 1);
      }
      if (t >= 2) {
        for (int op = 0; op < O; ++op)
          for (int b = 0; b < 2; ++b)
            c_b[(static_cast<size_t>(op) * S + s) * 2 + b] += st.x(t, op, b);
      }
    }
    if (include_initial_termination) {
      const StateId s1 = traj.steps[0].state;
      for (int b = 0; b < 2; ++b) {
        double w = 0.0;
        for (int o = 0; o < O; ++o) w += st.g(1, o, b);
        c_b[(static_cast<size_t>(traj.initial_option) * S + s1) * 2 + b] += w;
      }
    }
  }

  PolicyParams out = previous.params();
  auto fill_row = [](double* logits, const double* counts, int k,
                     const std::vector<double>& prev_probs) {
    double total = 0.0;
    for (int i = 0; i < k; ++i) total += counts[i];
    if (total > 0.0) {
      for (int i = 0; i < k; ++i) logits[i] = std::log(std::max(counts[i] / total, kLogitFloor));
    } else {
      for (int i = 0; i < k; ++i) logits[i] = std::log(std::max(prev_probs[i], kLogitFloor));
    }
  };

  for (int s = 0; s < S; ++s)
    fill_row(out.theta_hi.data() + static_cast<size_t>(s) * O,
             c_hi.data() + static_cast<size_t>(s) * O, O, previous.eval_pi_hi(s));
  for (int o = 0; o < O; ++o)
    for (int s = 0; s < S; ++s)
      fill_row(out.theta_lo.data() + (static_cast<size_t>(o) * S + s) * A,
               c_lo.data() + (static_cast<size_t>(o) * S + s) * A, A, previous.eval_pi_lo(s, o));
  for (int op = 0; op < O; ++op)
    for (int s = 0; s < S; ++s)
      fill_row(out.theta_b.data() + (static_cast<size_t>(op) * S + s) * 2,
               c_b.data() + (static_cast<size_t>(op) * S + s) * 2, 2, previous.eval_pi_b(s, op));
  return out;
}

BatchResult run_batch_bw(const std::vector<Trajectory>& trajectories, const BatchConfig& config,
                         HierarchicalPolicy initial, const RegularizerConfig& penalties,
                         uint64_t seed) {
  config.validate();
  penalties.validate();
  if (trajectories.empty()) throw ConfigError("run_batch_bw: no trajectories");
  for (const Trajectory& t : trajectories) {
    t.validate(initial.dims());
    if (t.length() < 2) throw ShapeError("run_batch_bw: every trajectory needs length >= 2");
  }
  if (config.mstep == MStepKind::ClosedFormTabular && initial.kind() != ParamKind::Tabular)
    throw ConfigError("run_batch_bw: closed-form M-step requires a tabular policy");

  long total_steps = 0;
  for (const Trajectory& t : trajectories) total_steps += t.length();

  // pooled (trajectory, time) indices for minibatch sampling
  std::vector<std::pair<int, long>> pool;
  pool.reserve(total_steps);
  for (size_t i = 0; i < trajectories.size(); ++i)
    for (long t = 1; t <= trajectories[i].length(); ++t)
      pool.emplace_back(static_cast<int>(i), t);

  Rng rng(seed);
  BatchResult result{std::move(initial), {}};
  std::vector<size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  size_t cursor = order.size();  // forces a reshuffle on first use

  std::vector<SmoothingTables> tables(trajectories.size());
  for (int n = 1; n <= config.n_iterations; ++n) {
    const double t0 = now_ms();

    const PolicyTables ptab = PolicyTables::build(result.policy);
    for (size_t i = 0; i < trajectories.size(); ++i)
      forward_backward_into(tables[i], ptab, trajectories[i]);

    if (config.mstep == MStepKind::ClosedFormTabular) {
      result.policy.set_params(tabular_m_step(tables, trajectories, result.policy, true));
    } else {
      AdamaxState opt = AdamaxState::init(result.policy.param_dim());
      for (int step = 0; step < config.gradient_steps; ++step) {
        WeightedLogTerms obj;
        obj.reg = penalties;
        const int batch = static_cast<int>(
            std::min<size_t>(static_cast<size_t>(config.minibatch), pool.size()));
        const double scale = 1.0 / batch;
        for (int k = 0; k < batch; ++k) {
          if (cursor >= order.size()) {  // new epoch: reshuffle without replacement
            for (size_t j = order.size(); j > 1; --j)
              std::swap(order[j - 1], order[rng.uniform_below(j)]);
            cursor = 0;
          }
          const auto [ti, t] = pool[order[cursor++]];
          append_batch_terms(obj, tables[ti], trajectories[ti], result.policy.dims(), t, scale);
          obj.reg_states.push_back(trajectories[ti].steps[t - 1].state);
          obj.reg_points.push_back(trajectories[ti].steps[t - 1]);
        }
        const std::vector<double> grad = objective_gradient(result.policy, obj);
        PolicyParams p = result.policy.params();
        adamax_step(p, grad, opt, config.learning_rate);
        result.policy.set_params(std::move(p));
      }
    }

    double loglik = 0.0;
    for (const Trajectory& traj : trajectories)
      loglik += marginal_log_likelihood(result.policy, traj);
    const double q = batch_q_total(result.policy, tables, trajectories, false);
    result.log.push_back({n, loglik, q, now_ms() - t0});
  }
  return result;
}

}  // namespace hil
