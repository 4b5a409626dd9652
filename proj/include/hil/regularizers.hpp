#ifndef HIL_REGULARIZERS_HPP
#define HIL_REGULARIZERS_HPP

#include <vector>

#include "hil/types.hpp"

namespace hil {

class HierarchicalPolicy;

// Penalty weights for the M-step objective  Q - lambda_b*L_b + lambda_v*L_v
// + lambda_kl*L_kl.  tau <= 0 means "use 1/n_options".
struct RegularizerConfig {
  double lambda_b = 1.0;
  double lambda_v = 0.1;
  double lambda_kl = 0.01;
  double tau = -1.0;

  static RegularizerConfig none() { return {0.0, 0.0, 0.0, -1.0}; }

  bool any_active() const { return lambda_b > 0.0 || lambda_v > 0.0 || lambda_kl > 0.0; }
  double resolve_tau(int n_options) const { return tau > 0.0 ? tau : 1.0 / n_options; }
  void validate() const;
};

// Probability floor inside the KL log denominator; keeps the maximized
// divergence finite near deterministic low-level policies.
constexpr double kKlFloor = 1e-8;

// Sparse activation penalty: sum_o |mean_s pi_hi(o|s) - tau|.
double l_b(const HierarchicalPolicy& policy, const std::vector<StateId>& states, double tau);

// Activation spread bonus: sum_o var_s pi_hi(o|s) (population variance).
double l_v(const HierarchicalPolicy& policy, const std::vector<StateId>& states);

// Pairwise low-level differentiation: both ordered option pairs, averaged
// over the evaluation points, single-action plug-in estimator.
double l_kl(const HierarchicalPolicy& policy, const std::vector<Step>& points);

double penalized_objective(double q_value, double lb, double lv, double lkl,
                           const RegularizerConfig& cfg);

}  // namespace hil

#endif  // HIL_REGULARIZERS_HPP
