#include "hil/regularizers.hpp"

#include <cmath>

#include "hil/policy.hpp"

namespace hil {

double l_b(const HierarchicalPolicy& policy, const std::vector<StateId>& states, double tau) {
  if (states.empty()) throw ConfigError("l_b: empty averaging set");
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("l_b: tau must be in (0, 1]");
  const int n_options = policy.dims().n_options;
  std::vector<double> mean(n_options, 0.0);
  for (StateId s : states) {
    const auto p = policy.eval_pi_hi(s);
    for (int o = 0; o < n_options; ++o) mean[o] += p[o];
  }
  double total = 0.0;
  for (int o = 0; o < n_options; ++o)
    total += std::abs(mean[o] / static_cast<double>(states.size()) - tau);
  return total;
}

double l_v(const HierarchicalPolicy& policy, const std::vector<StateId>& states) {
  if (states.empty()) throw ConfigError("l_v: empty averaging set");
  const int n_options = policy.dims().n_options;
  const double n = static_cast<double>(states.size());
  std::vector<std::vector<double>> probs;
  probs.reserve(states.size());
  std::vector<double> mean(n_options, 0.0);
  for (StateId s : states) {
    probs.push_back(policy.eval_pi_hi(s));
    for (int o = 0; o < n_options; ++o) mean[o] += probs.back()[o] / n;
  }
  double total = 0.0;
  for (const auto& p : probs)
    for (int o = 0; o < n_options; ++o) total += (p[o] - mean[o]) * (p[o] - mean[o]) / n;
  return total;
}

double l_kl(const HierarchicalPolicy& policy, const std::vector<Step>& points) {
  if (points.empty()) throw ConfigError("l_kl: empty evaluation set");
  const int n_options = policy.dims().n_options;
  const double n = static_cast<double>(points.size());
  double total = 0.0;
  for (const Step& pt : points) {
    std::vector<std::vector<double>> q(n_options);
    for (int o = 0; o < n_options; ++o) q[o] = policy.eval_pi_lo(pt.state, o);
    for (int o = 0; o < n_options; ++o) {
      for (int op = 0; op < n_options; ++op) {
        if (op == o) continue;
        const double x = q[o][pt.action];
        if (x <= 0.0) continue;  // 0 log 0 = 0
        const double yf = std::max(q[op][pt.action], kKlFloor);
        total += x * std::log(x / yf) / n;
      }
    }
  }
  return total;
}

double penalized_objective(double q_value, double lb, double lv, double lkl,
                           const RegularizerConfig& cfg) {
  return q_value - cfg.lambda_b * lb + cfg.lambda_v * lv + cfg.lambda_kl * lkl;
}

}  // namespace hil
