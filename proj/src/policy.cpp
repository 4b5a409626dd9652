#include "hil/policy.hpp"

#include <algorithm>
#include <cmath>

namespace hil {

namespace {

struct NetShape {
  int in = 0, hidden = 0, out = 0;
};

long net_size(const NetShape& n) {
  return static_cast<long>(n.hidden) * n.in + n.hidden +
         static_cast<long>(n.out) * n.hidden + n.out;
}

void softmax_inplace(std::vector<double>& z) {
  double m = z[0];
  for (double v : z) m = std::max(m, v);
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

// Forward pass; optionally records pre-activations and hidden output for
// the backward pass.
std::vector<double> net_forward(const double* w, const NetShape& n, const double* x,
                                std::vector<double>* pre_out, std::vector<double>* hid_out) {
  const double* w1 = w;
  const double* b1 = w + static_cast<long>(n.hidden) * n.in;
  const double* w2 = b1 + n.hidden;
  const double* b2 = w2 + static_cast<long>(n.out) * n.hidden;

  std::vector<double> pre(n.hidden), hid(n.hidden);
  for (int j = 0; j < n.hidden; ++j) {
    double acc = b1[j];
    const double* row = w1 + static_cast<long>(j) * n.in;
    for (int i = 0; i < n.in; ++i) acc += row[i] * x[i];
    pre[j] = acc;
    hid[j] = acc > 0.0 ? acc : 0.0;
  }
  std::vector<double> z(n.out);
  for (int k = 0; k < n.out; ++k) {
    double acc = b2[k];
    const double* row = w2 + static_cast<long>(k) * n.hidden;
    for (int j = 0; j < n.hidden; ++j) acc += row[j] * hid[j];
    z[k] = acc;
  }
  if (pre_out) *pre_out = std::move(pre);
  if (hid_out) *hid_out = std::move(hid);
  softmax_inplace(z);
  return z;
}

// Accumulates dz (gradient w.r.t. the logits) into the parameter gradient.
void net_backward(const double* w, double* grad, const NetShape& n, const double* x,
                  const std::vector<double>& pre, const std::vector<double>& hid,
                  const double* dz) {
  const long w1_off = 0;
  const long b1_off = static_cast<long>(n.hidden) * n.in;
  const long w2_off = b1_off + n.hidden;
  const long b2_off = w2_off + static_cast<long>(n.out) * n.hidden;

  std::vector<double> dh(n.hidden, 0.0);
  for (int k = 0; k < n.out; ++k) {
    const double d = dz[k];
    if (d == 0.0) continue;
    grad[b2_off + k] += d;
    const double* w2row = w + w2_off + static_cast<long>(k) * n.hidden;
    double* g2row = grad + w2_off + static_cast<long>(k) * n.hidden;
    for (int j = 0; j < n.hidden; ++j) {
      g2row[j] += d * hid[j];
      dh[j] += d * w2row[j];
    }
  }
  for (int j = 0; j < n.hidden; ++j) {
    if (pre[j] <= 0.0 || dh[j] == 0.0) continue;
    grad[b1_off + j] += dh[j];
    double* g1row = grad + w1_off + static_cast<long>(j) * n.in;
    for (int i = 0; i < n.in; ++i) g1row[i] += dh[j] * x[i];
  }
}

}  // namespace

void MlpSpec::validate() const {
  if (hidden_lo_b < 1 || hidden_hi < 1)
    throw ConfigError("MlpSpec: hidden unit counts must be >= 1");
  if (!(init_low < init_high)) throw ConfigError("MlpSpec: init_low must be < init_high");
}

void PolicyParams::validate_finite() const {
  for (const auto* block : {&theta_hi, &theta_lo, &theta_b})
    for (double v : *block)
      if (!std::isfinite(v)) throw NumericError("PolicyParams: non-finite entry");
}

void RegularizerConfig::validate() const {
  if (lambda_b < 0.0 || lambda_v < 0.0 || lambda_kl < 0.0)
    throw ConfigError("RegularizerConfig: lambdas must be >= 0");
  if (tau > 1.0) throw ConfigError("RegularizerConfig: tau must be in (0, 1]");
}

namespace {

NetShape hi_shape(const ModelDims& d, const StateTable& st, const MlpSpec& sp) {
  return {st.feature_dim, sp.hidden_hi, d.n_options};
}
NetShape lo_shape(const ModelDims& d, const StateTable& st, const MlpSpec& sp) {
  return {st.feature_dim, sp.hidden_lo_b, d.n_actions};
}
NetShape b_shape(const ModelDims& d, const StateTable& st, const MlpSpec& sp) {
  (void)d;
  return {st.feature_dim, sp.hidden_lo_b, 2};
}

long mlp_hi_size(const ModelDims& d, const StateTable& st, const MlpSpec& sp) {
  return net_size(hi_shape(d, st, sp));
}
long mlp_lo_size(const ModelDims& d, const StateTable& st, const MlpSpec& sp) {
  return static_cast<long>(d.n_options) * net_size(lo_shape(d, st, sp));
}
long mlp_b_size(const ModelDims& d, const StateTable& st, const MlpSpec& sp) {
  return static_cast<long>(d.n_options) * net_size(b_shape(d, st, sp));
}

}  // namespace

HierarchicalPolicy::HierarchicalPolicy(ModelDims dims, StateTable states, PolicyParams params,
                                       MlpSpec spec)
    : dims_(dims), states_(std::move(states)), spec_(spec), params_(std::move(params)) {
  dims_.validate();
  states_.validate(dims_);
  long hi, lo, b;
  if (params_.kind == ParamKind::Tabular) {
    hi = static_cast<long>(dims_.n_states) * dims_.n_options;
    lo = static_cast<long>(dims_.n_options) * dims_.n_states * dims_.n_actions;
    b = static_cast<long>(dims_.n_options) * dims_.n_states * 2;
  } else {
    spec_.validate();
    hi = mlp_hi_size(dims_, states_, spec_);
    lo = mlp_lo_size(dims_, states_, spec_);
    b = mlp_b_size(dims_, states_, spec_);
  }
  if (static_cast<long>(params_.theta_hi.size()) != hi ||
      static_cast<long>(params_.theta_lo.size()) != lo ||
      static_cast<long>(params_.theta_b.size()) != b)
    throw ShapeError("HierarchicalPolicy: parameter block sizes do not match dims");
  params_.validate_finite();
}

HierarchicalPolicy HierarchicalPolicy::zeros(ParamKind kind, ModelDims dims, StateTable states,
                                             MlpSpec spec) {
  PolicyParams p;
  p.kind = kind;
  if (kind == ParamKind::Tabular) {
    p.theta_hi.assign(static_cast<size_t>(dims.n_states) * dims.n_options, 0.0);
    p.theta_lo.assign(static_cast<size_t>(dims.n_options) * dims.n_states * dims.n_actions, 0.0);
    p.theta_b.assign(static_cast<size_t>(dims.n_options) * dims.n_states * 2, 0.0);
  } else {
    p.theta_hi.assign(mlp_hi_size(dims, states, spec), 0.0);
    p.theta_lo.assign(mlp_lo_size(dims, states, spec), 0.0);
    p.theta_b.assign(mlp_b_size(dims, states, spec), 0.0);
  }
  return HierarchicalPolicy(dims, std::move(states), std::move(p), spec);
}

namespace {

// Uniform weights, zero biases; draw order is fixed so seeded runs are
// reproducible.
void init_net_block(double* w, const NetShape& n, Rng& rng, double lo, double hi) {
  const long w1n = static_cast<long>(n.hidden) * n.in;
  const long b1_off = w1n;
  const long w2_off = b1_off + n.hidden;
  const long w2n = static_cast<long>(n.out) * n.hidden;
  const long b2_off = w2_off + w2n;
  for (long i = 0; i < w1n; ++i) w[i] = rng.uniform(lo, hi);
  for (int i = 0; i < n.hidden; ++i) w[b1_off + i] = 0.0;
  for (long i = 0; i < w2n; ++i) w[w2_off + i] = rng.uniform(lo, hi);
  for (int i = 0; i < n.out; ++i) w[b2_off + i] = 0.0;
}

}  // namespace

HierarchicalPolicy HierarchicalPolicy::random_init(ParamKind kind, ModelDims dims,
                                                   StateTable states, Rng& rng, MlpSpec spec) {
  HierarchicalPolicy pol = zeros(kind, dims, std::move(states), spec);
  PolicyParams p = pol.params();
  const double lo = spec.init_low, hi = spec.init_high;
  if (kind == ParamKind::Tabular) {
    for (double& v : p.theta_hi) v = rng.uniform(lo, hi);
    for (double& v : p.theta_lo) v = rng.uniform(lo, hi);
    for (double& v : p.theta_b) v = rng.uniform(lo, hi);
  } else {
    const NetShape nh = hi_shape(dims, pol.states(), spec);
    const NetShape nl = lo_shape(dims, pol.states(), spec);
    const NetShape nb = b_shape(dims, pol.states(), spec);
    init_net_block(p.theta_hi.data(), nh, rng, lo, hi);
    for (int o = 0; o < dims.n_options; ++o)
      init_net_block(p.theta_lo.data() + static_cast<long>(o) * net_size(nl), nl, rng, lo, hi);
    for (int o = 0; o < dims.n_options; ++o)
      init_net_block(p.theta_b.data() + static_cast<long>(o) * net_size(nb), nb, rng, lo, hi);
  }
  pol.set_params(std::move(p));
  return pol;
}

void HierarchicalPolicy::set_params(PolicyParams params) {
  if (params.kind != params_.kind || params.theta_hi.size() != params_.theta_hi.size() ||
      params.theta_lo.size() != params_.theta_lo.size() ||
      params.theta_b.size() != params_.theta_b.size())
    throw ShapeError("set_params: block sizes changed");
  params.validate_finite();
  params_ = std::move(params);
}

std::vector<double> HierarchicalPolicy::eval_pi_hi(StateId s) const {
  if (s < 0 || s >= dims_.n_states) throw DimensionError("eval_pi_hi: state out of range");
  if (params_.kind == ParamKind::Tabular) {
    std::vector<double> z(params_.theta_hi.begin() + static_cast<long>(s) * dims_.n_options,
                          params_.theta_hi.begin() + static_cast<long>(s + 1) * dims_.n_options);
    softmax_inplace(z);
    return z;
  }
  return net_forward(params_.theta_hi.data(), hi_shape(dims_, states_, spec_), states_.row(s),
                     nullptr, nullptr);
}

std::vector<double> HierarchicalPolicy::eval_pi_lo(StateId s, OptionId o) const {
  if (s < 0 || s >= dims_.n_states) throw DimensionError("eval_pi_lo: state out of range");
  if (o < 0 || o >= dims_.n_options) throw DimensionError("eval_pi_lo: option out of range");
  if (params_.kind == ParamKind::Tabular) {
    const long base = (static_cast<long>(o) * dims_.n_states + s) * dims_.n_actions;
    std::vector<double> z(params_.theta_lo.begin() + base,
                          params_.theta_lo.begin() + base + dims_.n_actions);
    softmax_inplace(z);
    return z;
  }
  const NetShape n = lo_shape(dims_, states_, spec_);
  return net_forward(params_.theta_lo.data() + static_cast<long>(o) * net_size(n), n,
                     states_.row(s), nullptr, nullptr);
}

std::vector<double> HierarchicalPolicy::eval_pi_b(StateId s, OptionId o_prev) const {
  if (s < 0 || s >= dims_.n_states) throw DimensionError("eval_pi_b: state out of range");
  if (o_prev < 0 || o_prev >= dims_.n_options)
    throw DimensionError("eval_pi_b: option out of range");
  if (params_.kind == ParamKind::Tabular) {
    const long base = (static_cast<long>(o_prev) * dims_.n_states + s) * 2;
    std::vector<double> z(params_.theta_b.begin() + base, params_.theta_b.begin() + base + 2);
    softmax_inplace(z);
    return z;
  }
  const NetShape n = b_shape(dims_, states_, spec_);
  return net_forward(params_.theta_b.data() + static_cast<long>(o_prev) * net_size(n), n,
                     states_.row(s), nullptr, nullptr);
}

std::vector<double> HierarchicalPolicy::hidden_preactivations(Head head, StateId s,
                                                              OptionId opt) const {
  if (params_.kind == ParamKind::Tabular) return {};
  if (s < 0 || s >= dims_.n_states)
    throw DimensionError("hidden_preactivations: state out of range");
  NetShape n;
  const double* w = nullptr;
  switch (head) {
    case Head::Hi:
      n = hi_shape(dims_, states_, spec_);
      w = params_.theta_hi.data();
      break;
    case Head::Lo:
      if (opt < 0 || opt >= dims_.n_options)
        throw DimensionError("hidden_preactivations: option out of range");
      n = lo_shape(dims_, states_, spec_);
      w = params_.theta_lo.data() + static_cast<long>(opt) * net_size(n);
      break;
    case Head::B:
      if (opt < 0 || opt >= dims_.n_options)
        throw DimensionError("hidden_preactivations: option out of range");
      n = b_shape(dims_, states_, spec_);
      w = params_.theta_b.data() + static_cast<long>(opt) * net_size(n);
      break;
  }
  std::vector<double> pre;
  net_forward(w, n, states_.row(s), &pre, nullptr);
  return pre;
}

std::vector<double> HierarchicalPolicy::flat_params() const {
  std::vector<double> out;
  out.reserve(param_dim());
  out.insert(out.end(), params_.theta_hi.begin(), params_.theta_hi.end());
  out.insert(out.end(), params_.theta_lo.begin(), params_.theta_lo.end());
  out.insert(out.end(), params_.theta_b.begin(), params_.theta_b.end());
  return out;
}

void HierarchicalPolicy::set_flat_params(const std::vector<double>& theta) {
  if (static_cast<long>(theta.size()) != param_dim())
    throw ShapeError("set_flat_params: wrong dimension");
  PolicyParams p = params_;
  size_t off = 0;
  std::copy(theta.begin(), theta.begin() + p.theta_hi.size(), p.theta_hi.begin());
  off += p.theta_hi.size();
  std::copy(theta.begin() + off, theta.begin() + off + p.theta_lo.size(), p.theta_lo.begin());
  off += p.theta_lo.size();
  std::copy(theta.begin() + off, theta.end(), p.theta_b.begin());
  set_params(std::move(p));
}

PolicyTables PolicyTables::build(const HierarchicalPolicy& policy) {
  const ModelDims& d = policy.dims();
  PolicyTables t;
  t.n_states = d.n_states;
  t.n_actions = d.n_actions;
  t.n_options = d.n_options;
  t.hi.resize(static_cast<size_t>(d.n_states) * d.n_options);
  t.lo.resize(static_cast<size_t>(d.n_states) * d.n_options * d.n_actions);
  t.b.resize(static_cast<size_t>(d.n_states) * d.n_options * 2);
  for (int s = 0; s < d.n_states; ++s) {
    const auto hi = policy.eval_pi_hi(s);
    std::copy(hi.begin(), hi.end(), t.hi.begin() + static_cast<size_t>(s) * d.n_options);
    for (int o = 0; o < d.n_options; ++o) {
      const auto lo = policy.eval_pi_lo(s, o);
      std::copy(lo.begin(), lo.end(),
                t.lo.begin() + (static_cast<size_t>(s) * d.n_options + o) * d.n_actions);
      const auto pb = policy.eval_pi_b(s, o);
      std::copy(pb.begin(), pb.end(),
                t.b.begin() + (static_cast<size_t>(s) * d.n_options + o) * 2);
    }
  }
  return t;
}

namespace {

// Routes logit-space gradients (dz) of either parameterization into the
// flat gradient vector laid out as (theta_hi | theta_lo | theta_b).
class GradSink {
 public:
  GradSink(const HierarchicalPolicy& policy, std::vector<double>& grad)
      : pol_(policy), grad_(grad) {
    base_lo_ = static_cast<long>(pol_.params().theta_hi.size());
    base_b_ = base_lo_ + static_cast<long>(pol_.params().theta_lo.size());
  }

  std::vector<double> probs(Head head, StateId s, OptionId opt) const {
    switch (head) {
      case Head::Hi: return pol_.eval_pi_hi(s);
      case Head::Lo: return pol_.eval_pi_lo(s, opt);
      case Head::B: return pol_.eval_pi_b(s, opt);
    }
    throw ModelError("unreachable head");
  }

  void add_dz(Head head, StateId s, OptionId opt, const double* dz) {
    const ModelDims& d = pol_.dims();
    if (pol_.kind() == ParamKind::Tabular) {
      long base = 0;
      int k = 0;
      switch (head) {
        case Head::Hi:
          base = static_cast<long>(s) * d.n_options;
          k = d.n_options;
          break;
        case Head::Lo:
          base = base_lo_ + (static_cast<long>(opt) * d.n_states + s) * d.n_actions;
          k = d.n_actions;
          break;
        case Head::B:
          base = base_b_ + (static_cast<long>(opt) * d.n_states + s) * 2;
          k = 2;
          break;
      }
      for (int i = 0; i < k; ++i) grad_[base + i] += dz[i];
      return;
    }
    const MlpSpec& sp = pol_.mlp_spec();
    const StateTable& st = pol_.states();
    NetShape n;
    const double* w = nullptr;
    long base = 0;
    switch (head) {
      case Head::Hi:
        n = hi_shape(d, st, sp);
        w = pol_.params().theta_hi.data();
        base = 0;
        break;
      case Head::Lo:
        n = lo_shape(d, st, sp);
        w = pol_.params().theta_lo.data() + static_cast<long>(opt) * net_size(n);
        base = base_lo_ + static_cast<long>(opt) * net_size(n);
        break;
      case Head::B:
        n = b_shape(d, st, sp);
        w = pol_.params().theta_b.data() + static_cast<long>(opt) * net_size(n);
        base = base_b_ + static_cast<long>(opt) * net_size(n);
        break;
    }
    std::vector<double> pre, hid;
    net_forward(w, n, st.row(s), &pre, &hid);
    net_backward(w, grad_.data() + base, n, st.row(s), pre, hid, dz);
  }

 private:
  const HierarchicalPolicy& pol_;
  std::vector<double>& grad_;
  long base_lo_ = 0, base_b_ = 0;
};

int head_outcomes(const HierarchicalPolicy& pol, Head head) {
  switch (head) {
    case Head::Hi: return pol.dims().n_options;
    case Head::Lo: return pol.dims().n_actions;
    case Head::B: return 2;
  }
  return 0;
}

void check_group(const HierarchicalPolicy& pol, const LogTermGroup& g) {
  const ModelDims& d = pol.dims();
  if (g.s < 0 || g.s >= d.n_states) throw DimensionError("LogTermGroup: state out of range");
  if (g.head != Head::Hi && (g.opt < 0 || g.opt >= d.n_options))
    throw DimensionError("LogTermGroup: option out of range");
  if (static_cast<int>(g.weights.size()) != head_outcomes(pol, g.head))
    throw ShapeError("LogTermGroup: weight vector length mismatch");
  for (double w : g.weights)
    if (!std::isfinite(w)) throw NumericError("LogTermGroup: non-finite weight");
}

}  // namespace

double objective_value(const HierarchicalPolicy& policy, const WeightedLogTerms& objective) {
  double total = 0.0;
  for (const LogTermGroup& g : objective.groups) {
    check_group(policy, g);
    std::vector<double> p;
    switch (g.head) {
      case Head::Hi: p = policy.eval_pi_hi(g.s); break;
      case Head::Lo: p = policy.eval_pi_lo(g.s, g.opt); break;
      case Head::B: p = policy.eval_pi_b(g.s, g.opt); break;
    }
    for (size_t k = 0; k < g.weights.size(); ++k) {
      const double w = g.weights[k];
      if (w == 0.0) continue;  // 0 log 0 = 0
      if (p[k] <= 0.0) return w > 0.0 ? kNegInf : std::numeric_limits<double>::infinity();
      total += w * std::log(p[k]);
    }
  }
  const RegularizerConfig& rc = objective.reg;
  if (rc.any_active()) {
    rc.validate();
    const double tau = rc.resolve_tau(policy.dims().n_options);
    double lb = 0.0, lv = 0.0, lkl = 0.0;
    if (rc.lambda_b > 0.0) lb = l_b(policy, objective.reg_states, tau);
    if (rc.lambda_v > 0.0) lv = l_v(policy, objective.reg_states);
    if (rc.lambda_kl > 0.0) lkl = l_kl(policy, objective.reg_points);
    total = penalized_objective(total, lb, lv, lkl, rc);
  }
  return total;
}

std::vector<double> objective_gradient(const HierarchicalPolicy& policy,
                                       const WeightedLogTerms& objective) {
  std::vector<double> grad(policy.param_dim(), 0.0);
  GradSink sink(policy, grad);

  for (const LogTermGroup& g : objective.groups) {
    check_group(policy, g);
    const std::vector<double> p = sink.probs(g.head, g.s, g.opt);
    double wsum = 0.0;
    bool any = false;
    for (double w : g.weights) {
      wsum += w;
      any = any || w != 0.0;
    }
    if (!any) continue;
    std::vector<double> dz(p.size());
    for (size_t k = 0; k < p.size(); ++k) dz[k] = g.weights[k] - p[k] * wsum;
    sink.add_dz(g.head, g.s, g.opt, dz.data());
  }

  const RegularizerConfig& rc = objective.reg;
  if (!rc.any_active()) return grad;
  rc.validate();
  const ModelDims& d = policy.dims();

  if (rc.lambda_b > 0.0 || rc.lambda_v > 0.0) {
    if (objective.reg_states.empty())
      throw ConfigError("objective_gradient: empty averaging set for L_b/L_v");
    const double tau = rc.resolve_tau(d.n_options);
    const double n = static_cast<double>(objective.reg_states.size());
    std::vector<std::vector<double>> probs;
    probs.reserve(objective.reg_states.size());
    std::vector<double> mean(d.n_options, 0.0);
    for (StateId s : objective.reg_states) {
      probs.push_back(policy.eval_pi_hi(s));
      for (int o = 0; o < d.n_options; ++o) mean[o] += probs.back()[o] / n;
    }
    std::vector<double> sign(d.n_options, 0.0);
    for (int o = 0; o < d.n_options; ++o) {
      const double dlt = mean[o] - tau;
      sign[o] = dlt > 0.0 ? 1.0 : (dlt < 0.0 ? -1.0 : 0.0);
    }
    for (size_t i = 0; i < objective.reg_states.size(); ++i) {
      const std::vector<double>& p = probs[i];
      std::vector<double> u(d.n_options, 0.0);
      for (int o = 0; o < d.n_options; ++o) {
        u[o] = -rc.lambda_b * sign[o] / n + rc.lambda_v * 2.0 / n * (p[o] - mean[o]);
      }
      double pu = 0.0;
      for (int o = 0; o < d.n_options; ++o) pu += p[o] * u[o];
      std::vector<double> dz(d.n_options);
      for (int o = 0; o < d.n_options; ++o) dz[o] = p[o] * (u[o] - pu);
      sink.add_dz(Head::Hi, objective.reg_states[i], 0, dz.data());
    }
  }

  if (rc.lambda_kl > 0.0) {
    if (objective.reg_points.empty())
      throw ConfigError("objective_gradient: empty evaluation set for L_kl");
    const double n = static_cast<double>(objective.reg_points.size());
    for (const Step& pt : objective.reg_points) {
      std::vector<std::vector<double>> q(d.n_options);
      for (int o = 0; o < d.n_options; ++o) q[o] = policy.eval_pi_lo(pt.state, o);
      // du[o] is the derivative w.r.t. pi_lo(a | s, o) at the point's action.
      std::vector<double> du(d.n_options, 0.0);
      for (int o = 0; o < d.n_options; ++o) {
        for (int op = 0; op < d.n_options; ++op) {
          if (op == o) continue;
          const double x = q[o][pt.action];
          const double y = q[op][pt.action];
          const double yf = std::max(y, kKlFloor);
          if (x > 0.0) {
            du[o] += rc.lambda_kl / n * (std::log(x / yf) + 1.0);
            if (y > kKlFloor) du[op] += rc.lambda_kl / n * (-x / yf);
          }
        }
      }
      for (int o = 0; o < d.n_options; ++o) {
        if (du[o] == 0.0) continue;
        std::vector<double> u(d.n_actions, 0.0);
        u[pt.action] = du[o];
        double pu = q[o][pt.action] * du[o];
        std::vector<double> dz(d.n_actions);
        for (int a = 0; a < d.n_actions; ++a) dz[a] = q[o][a] * (u[a] - pu);
        sink.add_dz(Head::Lo, pt.state, o, dz.data());
      }
    }
  }
  return grad;
}

void adamax_step(PolicyParams& params, const std::vector<double>& gradient, AdamaxState& state,
                 double learning_rate) {
  const long d = params.dim();
  if (static_cast<long>(gradient.size()) != d)
    throw ShapeError("adamax_step: gradient dimension mismatch");
  if (static_cast<long>(state.m.size()) != d)
    throw ShapeError("adamax_step: optimizer state dimension mismatch");
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  state.t += 1;
  const double correction = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  double* blocks[3] = {params.theta_hi.data(), params.theta_lo.data(), params.theta_b.data()};
  const long sizes[3] = {static_cast<long>(params.theta_hi.size()),
                         static_cast<long>(params.theta_lo.size()),
                         static_cast<long>(params.theta_b.size())};
  long idx = 0;
  for (int blk = 0; blk < 3; ++blk) {
    for (long i = 0; i < sizes[blk]; ++i, ++idx) {
      const double g = gradient[idx];
      if (!std::isfinite(g)) throw NumericError("adamax_step: non-finite gradient");
      state.m[idx] = beta1 * state.m[idx] + (1.0 - beta1) * g;
      state.u[idx] = std::max(beta2 * state.u[idx], std::abs(g));
      blocks[blk][i] += learning_rate / correction * state.m[idx] / (state.u[idx] + eps);
    }
  }
}

}  // namespace hil
