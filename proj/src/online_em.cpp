#include "hil/online_em.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

namespace hil {

namespace {

constexpr double kLogitFloor = 1e-30;

double now_us() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double, std::micro>(clock::now().time_since_epoch()).count();
}

std::vector<double> checked_prior(const ModelDims& dims, std::vector<double> prior) {
  if (prior.empty()) prior.assign(dims.n_options, 1.0 / dims.n_options);
  if (static_cast<int>(prior.size()) != dims.n_options)
    throw ConfigError("online prior: wrong length");
  double sum = 0.0;
  for (double v : prior) {
    if (v < 0.0) throw ConfigError("online prior: negative entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("online prior: must sum to 1");
  return prior;
}

}  // namespace

OnlineStatistics::OnlineStatistics(const ModelDims& dims, std::vector<double> prior)
    : dims_(dims), chi_(checked_prior(dims, std::move(prior))) {
  dims_.validate();
  state_slot_.assign(dims_.n_states, -1);
  action_slot_.assign(dims_.n_actions, -1);
}

OnlineStatistics init_statistics(const ModelDims& dims, const std::vector<double>& prior) {
  return OnlineStatistics(dims, prior);
}

size_t OnlineStatistics::rho_index(OptionId op, Bit b, OptionId o, int s_slot, int a_slot,
                                   OptionId o_last) const {
  const int O = dims_.n_options;
  return ((((static_cast<size_t>(op) * 2 + b) * O + o) * s_cap_ + s_slot) * a_cap_ + a_slot) * O +
         o_last;
}

double OnlineStatistics::rho_at(OptionId op, Bit b, OptionId o, int s_slot, int a_slot,
                                OptionId o_last) const {
  return rho_[rho_index(op, b, o, s_slot, a_slot, o_last)];
}

double OnlineStatistics::rho_mass(OptionId o_last) const {
  const int O = dims_.n_options;
  double total = 0.0;
  for (size_t i = o_last; i < rho_.size(); i += O) total += rho_[i];
  return total;
}

double OnlineStatistics::chi_normalization() const {
  double total = 0.0;
  for (double v : chi_) total += v;
  return total;
}

std::vector<StateId> OnlineStatistics::explored_states() const {
  std::vector<StateId> out(slot_state_.begin(), slot_state_.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<ActionId> OnlineStatistics::explored_actions() const {
  std::vector<ActionId> out(slot_action_.begin(), slot_action_.end());
  std::sort(out.begin(), out.end());
  return out;
}

void OnlineStatistics::grow(int new_s_cap, int new_a_cap) {
  const int O = dims_.n_options;
  std::vector<double> next(static_cast<size_t>(O) * 2 * O * new_s_cap * new_a_cap * O, 0.0);
  for (int op = 0; op < O; ++op)
    for (int b = 0; b < 2; ++b)
      for (int o = 0; o < O; ++o)
        for (int sl = 0; sl < s_cap_; ++sl)
          for (int al = 0; al < a_cap_; ++al)
            for (int ol = 0; ol < O; ++ol) {
              const size_t src = rho_index(op, b, o, sl, al, ol);
              const size_t dst =
                  ((((static_cast<size_t>(op) * 2 + b) * O + o) * new_s_cap + sl) * new_a_cap +
                   al) * O + ol;
              next[dst] = rho_[src];
            }
  rho_ = std::move(next);
  s_cap_ = new_s_cap;
  a_cap_ = new_a_cap;
}

int OnlineStatistics::slot_for_state(StateId s) {
  if (s < 0 || s >= dims_.n_states) throw DimensionError("OnlineStatistics: state out of range");
  if (state_slot_[s] >= 0) return state_slot_[s];
  slot_state_.push_back(s);
  state_slot_[s] = static_cast<int>(slot_state_.size()) - 1;
  grow(s_cap_ + 1, a_cap_);
  return state_slot_[s];
}

int OnlineStatistics::slot_for_action(ActionId a) {
  if (a < 0 || a >= dims_.n_actions)
    throw DimensionError("OnlineStatistics: action out of range");
  if (action_slot_[a] >= 0) return action_slot_[a];
  slot_action_.push_back(a);
  action_slot_[a] = static_cast<int>(slot_action_.size()) - 1;
  grow(s_cap_, a_cap_ + 1);
  return action_slot_[a];
}

void OnlineStatistics::set_chi_for_test(std::vector<double> chi) {
  if (static_cast<int>(chi.size()) != dims_.n_options)
    throw ShapeError("set_chi_for_test: wrong length");
  chi_ = std::move(chi);
}

void OnlineStatistics::update(const HierarchicalPolicy& policy, StateId s, ActionId a) {
  const ModelDims& d = dims_;
  const int O = d.n_options;
  const int sl = slot_for_state(s);
  const int al = slot_for_action(a);
  const double T = static_cast<double>(t_ + 1);

  // head evaluations at the new sample
  const std::vector<double> pih = policy.eval_pi_hi(s);
  std::vector<double> plo(O);
  for (int o = 0; o < O; ++o) plo[o] = policy.eval_pi_lo(s, o)[a];
  std::vector<double> pib(static_cast<size_t>(O) * 2);
  for (int op = 0; op < O; ++op) {
    const auto p = policy.eval_pi_b(s, op);
    pib[op * 2 + 0] = p[0];
    pib[op * 2 + 1] = p[1];
  }

  // Predictive option weight D(o'') = sum_{o''',b'} tilde_pi_hi * pi_b * chi.
  double term_mass = 0.0;  // sum_o''' pi_b(1|s,o''') chi(o''')
  for (int o3 = 0; o3 < O; ++o3) term_mass += pib[o3 * 2 + 1] * chi_[o3];
  std::vector<double> predictive(O);
  for (int o2 = 0; o2 < O; ++o2)
    predictive[o2] = pih[o2] * term_mass + pib[o2 * 2 + 0] * chi_[o2];

  // Posterior kernels given O_T = o'': K over (o''', b') and its b'-marginal M.
  std::vector<double> kernel(static_cast<size_t>(O) * 2 * O, 0.0);  // (o''', b', o'')
  std::vector<double> mix(static_cast<size_t>(O) * O, 0.0);         // (o''', o'')
  for (int o2 = 0; o2 < O; ++o2) {
    if (!(predictive[o2] > 0.0)) continue;  // unreachable option; chi weight is zero
    for (int o3 = 0; o3 < O; ++o3) {
      const double k1 = pih[o2] * pib[o3 * 2 + 1] * chi_[o3] / predictive[o2];
      const double k0 = (o2 == o3) ? pib[o3 * 2 + 0] * chi_[o3] / predictive[o2] : 0.0;
      kernel[(static_cast<size_t>(o3) * 2 + 0) * O + o2] = k0;
      kernel[(static_cast<size_t>(o3) * 2 + 1) * O + o2] = k1;
      mix[static_cast<size_t>(o3) * O + o2] = k0 + k1;
    }
  }

  // rho <- (1 - 1/T) * (rho mixed over the conditioning option) + kappa/T.
  std::vector<double> next(rho_.size(), 0.0);
  const double keep = 1.0 - 1.0 / T;
  if (keep > 0.0) {
    const size_t rows = rho_.size() / O;
    for (size_t row = 0; row < rows; ++row) {
      const double* src = rho_.data() + row * O;
      double* dst = next.data() + row * O;
      for (int o3 = 0; o3 < O; ++o3) {
        const double v = src[o3];
        if (v == 0.0) continue;
        const double* mrow = mix.data() + static_cast<size_t>(o3) * O;
        for (int o2 = 0; o2 < O; ++o2) dst[o2] += keep * v * mrow[o2];
      }
    }
  }
  for (int o2 = 0; o2 < O; ++o2) {
    for (int o3 = 0; o3 < O; ++o3) {
      for (int b = 0; b < 2; ++b) {
        const double k = kernel[(static_cast<size_t>(o3) * 2 + b) * O + o2];
        if (k == 0.0) continue;
        // new mass lands on cells with o = o'' at the observed (s, a)
        next[rho_index(o3, b, o2, sl, al, o2)] += k / T;
      }
    }
  }
  rho_ = std::move(next);

  // chi update: chi_T(o) proportional to pi_lo(a|s,o) * predictive(o).
  double norm = 0.0;
  std::vector<double> chi_next(O);
  for (int o = 0; o < O; ++o) {
    chi_next[o] = plo[o] * predictive[o];
    norm += chi_next[o];
  }
  if (!(norm > 0.0))
    throw DegenerateDataError(
        "e_step_update: observed action has probability zero at sample " + std::to_string(t_ + 1),
        t_ + 1);
  for (double& v : chi_next) v /= norm;
  chi_ = std::move(chi_next);
  t_ += 1;
}

void e_step_update(OnlineStatistics& stats, const HierarchicalPolicy& policy, StateId s,
                   ActionId a) {
  stats.update(policy, s, a);
}

double PhiStatistic::at(OptionId op, Bit b, OptionId o, int s_slot, int a_slot) const {
  const int O = dims.n_options;
  return phi[(((static_cast<size_t>(op) * 2 + b) * O + o) * slot_state.size() + s_slot) *
                 slot_action.size() +
             a_slot];
}

double PhiStatistic::total_mass() const {
  double total = 0.0;
  for (double v : phi) total += v;
  return total;
}

PhiStatistic compose_phi(const OnlineStatistics& stats) {
  if (stats.t() < 1) throw EmptyStatisticError("compose_phi: no samples processed yet");
  const ModelDims& d = stats.dims();
  const int O = d.n_options;
  PhiStatistic out;
  out.dims = d;
  out.slot_state.resize(stats.n_state_slots());
  for (int i = 0; i < stats.n_state_slots(); ++i) out.slot_state[i] = stats.slot_state(i);
  out.slot_action.resize(stats.n_action_slots());
  for (int i = 0; i < stats.n_action_slots(); ++i) out.slot_action[i] = stats.slot_action(i);
  out.phi.assign(stats.rho().size() / O, 0.0);
  const std::vector<double>& rho = stats.rho();
  const std::vector<double>& chi = stats.chi();
  for (size_t row = 0; row < out.phi.size(); ++row) {
    double acc = 0.0;
    const double* src = rho.data() + row * O;
    for (int ol = 0; ol < O; ++ol) acc += src[ol] * chi[ol];
    out.phi[row] = acc;
  }
  return out;
}

WeightedLogTerms phi_objective_terms(const PhiStatistic& phi) {
  const int O = phi.dims.n_options;
  const int S = static_cast<int>(phi.slot_state.size());
  const int A = static_cast<int>(phi.slot_action.size());

  // aggregate per-head weights over the support
  std::vector<double> w_hi(static_cast<size_t>(S) * O, 0.0);
  std::vector<double> w_lo(static_cast<size_t>(S) * O * A, 0.0);
  std::vector<double> w_b(static_cast<size_t>(S) * O * 2, 0.0);
  for (int op = 0; op < O; ++op)
    for (int b = 0; b < 2; ++b)
      for (int o = 0; o < O; ++o)
        for (int sl = 0; sl < S; ++sl)
          for (int al = 0; al < A; ++al) {
            const double v = phi.at(op, b, o, sl, al);
            if (v == 0.0) continue;
            w_b[(static_cast<size_t>(sl) * O + op) * 2 + b] += v;
            if (b == 1) w_hi[static_cast<size_t>(sl) * O + o] += v;
            w_lo[(static_cast<size_t>(sl) * O + o) * A + al] += v;
          }

  WeightedLogTerms out;
  out.reg = RegularizerConfig::none();
  for (int sl = 0; sl < S; ++sl) {
    const StateId s = phi.slot_state[sl];
    {
      LogTermGroup g;
      g.head = Head::Hi;
      g.s = s;
      g.weights.assign(O, 0.0);
      bool any = false;
      for (int o = 0; o < O; ++o) {
        g.weights[o] = w_hi[static_cast<size_t>(sl) * O + o];
        any = any || g.weights[o] != 0.0;
      }
      if (any) out.groups.push_back(std::move(g));
    }
    for (int o = 0; o < O; ++o) {
      LogTermGroup g;
      g.head = Head::Lo;
      g.s = s;
      g.opt = o;
      g.weights.assign(phi.dims.n_actions, 0.0);
      bool any = false;
      for (int al = 0; al < A; ++al) {
        const double v = w_lo[(static_cast<size_t>(sl) * O + o) * A + al];
        if (v != 0.0) {
          g.weights[phi.slot_action[al]] = v;
          any = true;
        }
      }
      if (any) out.groups.push_back(std::move(g));
    }
    for (int op = 0; op < O; ++op) {
      LogTermGroup g;
      g.head = Head::B;
      g.s = s;
      g.opt = op;
      g.weights = {w_b[(static_cast<size_t>(sl) * O + op) * 2 + 0],
                   w_b[(static_cast<size_t>(sl) * O + op) * 2 + 1]};
      if (g.weights[0] != 0.0 || g.weights[1] != 0.0) out.groups.push_back(std::move(g));
    }
  }
  return out;
}

double online_q(const HierarchicalPolicy& policy_new, const PhiStatistic& phi) {
  return objective_value(policy_new, phi_objective_terms(phi));
}

PolicyParams tabular_m_step(const PhiStatistic& phi, const HierarchicalPolicy& previous) {
  if (previous.kind() != ParamKind::Tabular)
    throw ConfigError("tabular_m_step: policy must be tabular");
  const ModelDims& d = previous.dims();
  const int S = d.n_states, A = d.n_actions, O = d.n_options;

  std::vector<double> c_hi(static_cast<size_t>(S) * O, 0.0);
  std::vector<double> c_lo(static_cast<size_t>(O) * S * A, 0.0);
  std::vector<double> c_b(static_cast<size_t>(O) * S * 2, 0.0);
  const int Sl = static_cast<int>(phi.slot_state.size());
  const int Al = static_cast<int>(phi.slot_action.size());
  for (int op = 0; op < O; ++op)
    for (int b = 0; b < 2; ++b)
      for (int o = 0; o < O; ++o)
        for (int sl = 0; sl < Sl; ++sl)
          for (int al = 0; al < Al; ++al) {
            const double v = phi.at(op, b, o, sl, al);
            if (v == 0.0) continue;
            const StateId s = phi.slot_state[sl];
            const ActionId a = phi.slot_action[al];
            c_b[(static_cast<size_t>(op) * S + s) * 2 + b] += v;
            if (b == 1) c_hi[static_cast<size_t>(s) * O + o] += v;
            c_lo[(static_cast<size_t>(o) * S + s) * A + a] += v;
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

void OnlineConfig::validate() const {
  if (t_min < 1) throw ConfigError("OnlineConfig: t_min must be >= 1");
  if (mstep_every < 1) throw ConfigError("OnlineConfig: mstep_every must be >= 1");
  if (mstep == MStepKind::Gradient) {
    if (gradient_steps < 1) throw ConfigError("OnlineConfig: gradient_steps must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("OnlineConfig: learning_rate must be > 0");
  }
}

OnlineResult run_online_bw(const std::vector<Step>& stream, const OnlineConfig& config,
                           HierarchicalPolicy initial, const RegularizerConfig& penalties) {
  config.validate();
  penalties.validate();
  if (stream.empty()) throw ConfigError("run_online_bw: empty stream");
  if (config.mstep == MStepKind::ClosedFormTabular && initial.kind() != ParamKind::Tabular)
    throw ConfigError("run_online_bw: closed-form M-step requires a tabular policy");

  OnlineResult result{std::move(initial), {}};
  OnlineStatistics stats(result.policy.dims(), config.prior);
  result.log.reserve(stream.size());

  for (size_t i = 0; i < stream.size(); ++i) {
    const double t0 = now_us();
    e_step_update(stats, result.policy, stream[i].state, stream[i].action);
    const long t = stats.t();

    OnlineStepLog entry;
    entry.t = t;
    const bool fire =
        t > config.t_min && ((t - config.t_min - 1) % config.mstep_every == 0);
    if (fire) {
      const PhiStatistic phi = compose_phi(stats);
      if (config.mstep == MStepKind::ClosedFormTabular) {
        result.policy.set_params(tabular_m_step(phi, result.policy));
      } else {
        WeightedLogTerms obj = phi_objective_terms(phi);
        obj.reg = penalties;
        if (penalties.lambda_b > 0.0 || penalties.lambda_v > 0.0)
          obj.reg_states = stats.explored_states();
        if (penalties.lambda_kl > 0.0) obj.reg_points = {stream[i]};
        AdamaxState opt = AdamaxState::init(result.policy.param_dim());
        for (int step = 0; step < config.gradient_steps; ++step) {
          const std::vector<double> grad = objective_gradient(result.policy, obj);
          PolicyParams p = result.policy.params();
          adamax_step(p, grad, opt, config.learning_rate);
          result.policy.set_params(std::move(p));
        }
      }
      entry.has_q = true;
      entry.q_value = online_q(result.policy, phi);
    }
    entry.wall_us = now_us() - t0;
    result.log.push_back(entry);
  }
  return result;
}

}  // namespace hil
