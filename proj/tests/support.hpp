#ifndef HIL_TESTS_SUPPORT_HPP
#define HIL_TESTS_SUPPORT_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "hil/oracle.hpp"
#include "hil/policy.hpp"

namespace hil::testing {

inline StateTable random_features(Rng& rng, int n_states, int dim) {
  StateTable t;
  t.feature_dim = dim;
  t.features.resize(static_cast<size_t>(n_states) * dim);
  for (double& v : t.features) v = rng.uniform(0.0, 1.0);
  return t;
}

inline HierarchicalPolicy random_mlp_policy(Rng& rng, const ModelDims& dims, MlpSpec spec,
                                            int feature_dim = 2) {
  StateTable table = random_features(rng, dims.n_states, feature_dim);
  return HierarchicalPolicy::random_init(ParamKind::Mlp, dims, std::move(table), rng, spec);
}

inline HierarchicalPolicy random_tabular_policy(Rng& rng, const ModelDims& dims) {
  StateTable table = StateTable::identity_features(dims.n_states);
  PolicyParams p;
  p.kind = ParamKind::Tabular;
  p.theta_hi.resize(static_cast<size_t>(dims.n_states) * dims.n_options);
  p.theta_lo.resize(static_cast<size_t>(dims.n_options) * dims.n_states * dims.n_actions);
  p.theta_b.resize(static_cast<size_t>(dims.n_options) * dims.n_states * 2);
  for (auto* block : {&p.theta_hi, &p.theta_lo, &p.theta_b})
    for (double& v : *block) v = rng.uniform(-1.5, 1.5);
  return HierarchicalPolicy(dims, std::move(table), std::move(p));
}

// Random objective with non-negative weights, occasional zeros, and all
// three penalties active.
inline WeightedLogTerms random_objective(Rng& rng, const ModelDims& dims, int n_groups,
                                         bool with_penalties) {
  WeightedLogTerms obj;
  for (int i = 0; i < n_groups; ++i) {
    LogTermGroup g;
    const int pick = static_cast<int>(rng.uniform_below(3));
    g.head = pick == 0 ? Head::Hi : (pick == 1 ? Head::Lo : Head::B);
    g.s = static_cast<StateId>(rng.uniform_below(dims.n_states));
    g.opt = static_cast<OptionId>(rng.uniform_below(dims.n_options));
    const int k = g.head == Head::Hi ? dims.n_options : (g.head == Head::Lo ? dims.n_actions : 2);
    g.weights.resize(k);
    for (double& w : g.weights) w = rng.next_double() < 0.25 ? 0.0 : rng.uniform(0.0, 1.0);
    obj.groups.push_back(std::move(g));
  }
  if (with_penalties) {
    obj.reg = RegularizerConfig{1.0, 0.1, 0.01, -1.0};
    const int n_states = 1 + static_cast<int>(rng.uniform_below(dims.n_states));
    for (int i = 0; i < n_states; ++i)
      obj.reg_states.push_back(static_cast<StateId>(rng.uniform_below(dims.n_states)));
    const int n_points = 1 + static_cast<int>(rng.uniform_below(4));
    for (int i = 0; i < n_points; ++i)
      obj.reg_points.push_back({static_cast<StateId>(rng.uniform_below(dims.n_states)),
                                static_cast<ActionId>(rng.uniform_below(dims.n_actions))});
  } else {
    obj.reg = RegularizerConfig::none();
  }
  return obj;
}

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline double gradient_relative_error(const std::vector<double>& analytic,
                                      const std::vector<double>& numeric) {
  double diff = 0.0;
  for (size_t i = 0; i < analytic.size(); ++i)
    diff = std::max(diff, std::abs(analytic[i] - numeric[i]));
  const double scale = std::max({1e-3, max_abs(analytic), max_abs(numeric)});
  return diff / scale;
}

}  // namespace hil::testing

#endif  // HIL_TESTS_SUPPORT_HPP
