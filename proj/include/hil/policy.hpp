#ifndef HIL_POLICY_HPP
#define HIL_POLICY_HPP

#include <vector>

#include "hil/common.hpp"
#include "hil/regularizers.hpp"
#include "hil/types.hpp"

namespace hil {

enum class ParamKind { Tabular, Mlp };

// One-hidden-layer network shape shared by the three heads; the low-level
// and termination heads instantiate one network per option.
struct MlpSpec {
  int hidden_lo_b = 30;
  int hidden_hi = 100;
  double init_low = -0.5;
  double init_high = 0.5;

  void validate() const;
};

// The flat parameter blocks theta = (theta_hi, theta_lo, theta_b).
struct PolicyParams {
  ParamKind kind = ParamKind::Tabular;
  std::vector<double> theta_hi;
  std::vector<double> theta_lo;
  std::vector<double> theta_b;

  long dim() const {
    return static_cast<long>(theta_hi.size() + theta_lo.size() + theta_b.size());
  }
  void validate_finite() const;
};

enum class Head { Hi, Lo, B };

// One additive objective contribution sum_k weights[k] * log head(k | input).
// For Hi the input is the state (opt ignored); for Lo it is (state, option);
// for B it is (state, previous option).
struct LogTermGroup {
  Head head = Head::Hi;
  StateId s = 0;
  OptionId opt = 0;
  std::vector<double> weights;
};

// M-step objective: weighted log-probability terms plus optional penalties.
// reg_states is the averaging set for L_b/L_v, reg_points the evaluation
// set for L_kl; each is required only when its lambda is positive.
struct WeightedLogTerms {
  std::vector<LogTermGroup> groups;
  RegularizerConfig reg = RegularizerConfig::none();
  std::vector<StateId> reg_states;
  std::vector<Step> reg_points;
};

class HierarchicalPolicy {
 public:
  HierarchicalPolicy(ModelDims dims, StateTable states, PolicyParams params,
                     MlpSpec spec = {});

  // All-zero parameters: every head uniform.
  static HierarchicalPolicy zeros(ParamKind kind, ModelDims dims, StateTable states,
                                  MlpSpec spec = {});
  // Weights (and tabular logits) drawn U(init_low, init_high); MLP biases zero.
  static HierarchicalPolicy random_init(ParamKind kind, ModelDims dims, StateTable states,
                                        Rng& rng, MlpSpec spec = {});

  const ModelDims& dims() const { return dims_; }
  const StateTable& states() const { return states_; }
  const MlpSpec& mlp_spec() const { return spec_; }
  const PolicyParams& params() const { return params_; }
  ParamKind kind() const { return params_.kind; }

  std::vector<double> eval_pi_hi(StateId s) const;
  std::vector<double> eval_pi_lo(StateId s, OptionId o) const;
  std::vector<double> eval_pi_b(StateId s, OptionId o_prev) const;

  // Hidden-layer pre-activations of one head network (diagnostics: dead
  // units, kink proximity for finite-difference checks). Empty for the
  // tabular parameterization. For Hi the option index is ignored.
  std::vector<double> hidden_preactivations(Head head, StateId s, OptionId opt) const;

  long param_dim() const { return params_.dim(); }
  std::vector<double> flat_params() const;
  void set_flat_params(const std::vector<double>& theta);
  void set_params(PolicyParams params);

 private:
  ModelDims dims_;
  StateTable states_;
  MlpSpec spec_;
  PolicyParams params_;
};

// Head probabilities cached for every state; the smoothing recursions do
// table lookups instead of re-running the networks at each step.
struct PolicyTables {
  int n_states = 0, n_actions = 0, n_options = 0;
  std::vector<double> hi;  // s*O + o
  std::vector<double> lo;  // (s*O + o)*A + a
  std::vector<double> b;   // (s*O + o_prev)*2 + bit

  static PolicyTables build(const HierarchicalPolicy& policy);

  double pi_hi(StateId s, OptionId o) const {
    return hi[static_cast<size_t>(s) * n_options + o];
  }
  double pi_lo(StateId s, OptionId o, ActionId a) const {
    return lo[(static_cast<size_t>(s) * n_options + o) * n_actions + a];
  }
  double pi_b(StateId s, OptionId o_prev, Bit bit) const {
    return b[(static_cast<size_t>(s) * n_options + o_prev) * 2 + bit];
  }
};

// Value of sum_i w_i log p_i minus/plus the configured penalties, with the
// 0 log 0 = 0 convention; -inf when a positive weight meets a zero
// probability.
double objective_value(const HierarchicalPolicy& policy, const WeightedLogTerms& objective);

// Exact analytic gradient of objective_value over the flattened parameter
// vector (theta_hi | theta_lo | theta_b).
std::vector<double> objective_gradient(const HierarchicalPolicy& policy,
                                       const WeightedLogTerms& objective);

// Adamax in ascent direction (beta1 = 0.9, beta2 = 0.999, eps = 1e-8).
struct AdamaxState {
  long t = 0;
  std::vector<double> m;  // first-moment EMA
  std::vector<double> u;  // infinity-norm second moment

  static AdamaxState init(long dim) {
    AdamaxState s;
    s.m.assign(dim, 0.0);
    s.u.assign(dim, 0.0);
    return s;
  }
};

void adamax_step(PolicyParams& params, const std::vector<double>& gradient,
                 AdamaxState& state, double learning_rate);

}  // namespace hil

#endif  // HIL_POLICY_HPP
