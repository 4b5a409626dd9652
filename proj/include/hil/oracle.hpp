#ifndef HIL_ORACLE_HPP
#define HIL_ORACLE_HPP

#include <string>
#include <vector>

#include "hil/policy.hpp"
#include "hil/types.hpp"

namespace hil::oracle {

// Exact posteriors from exhaustive enumeration of every latent sequence.
// Deliberately independent of the forward-backward and streaming
// recursions it certifies: plain products of head probabilities, summed.
struct EnumerationPosteriors {
  long T = 0;
  int n_options = 0;
  int n_states = 0;
  int n_actions = 0;
  double loglik = kNegInf;      // log P(actions | states, conditioning)
  std::vector<double> gamma;    // T x O x 2: P(O_t, B_t | data)
  std::vector<double> xi;       // (T-1) x O x 2, row i is t = i+2: P(O_{t-1}, B_t | data)
  std::vector<double> b1;       // 2: P(B_1 | data)
  std::vector<double> phi;      // O x 2 x O x S x A over global ids

  double g(long t, OptionId o, Bit b) const { return gamma[((t - 1) * n_options + o) * 2 + b]; }
  double x(long t, OptionId o_prev, Bit b) const {
    return xi[((t - 2) * n_options + o_prev) * 2 + b];
  }
  double phi_at(OptionId op, Bit b, OptionId o, StateId s, ActionId a) const {
    return phi[(((static_cast<size_t>(op) * 2 + b) * n_options + o) * n_states + s) * n_actions +
               a];
  }
};

// Conditioning on the trajectory's fixed o_0.
EnumerationPosteriors enumerate_posteriors(const HierarchicalPolicy& policy,
                                           const Trajectory& trajectory);

// Conditioning on a prior over O_0 (the streaming initialization); an empty
// prior means uniform.
EnumerationPosteriors enumerate_posteriors_with_prior(const HierarchicalPolicy& policy,
                                                      const std::vector<Step>& stream,
                                                      const std::vector<double>& prior);

// Central-difference gradient of the same objective the analytic path
// differentiates.
std::vector<double> finite_difference_gradient(const HierarchicalPolicy& policy,
                                               const WeightedLogTerms& objective, double h);

// Random small instances for the oracle suites: tabular policy with
// uniform(-1.5, 1.5) logits, uniform random observation sequence.
struct RandomInstance {
  ModelDims dims;
  HierarchicalPolicy policy;
  Trajectory trajectory;
};

RandomInstance random_instance(Rng& rng, long t_min, long t_max, int o_max, int s_max, int a_max);

struct OracleCheckResult {
  std::string name;
  double max_deviation = 0.0;
  double tolerance = 0.0;
  int instances = 0;
  bool pass = false;
};

// The brute-force certification suite behind the oracle-check command:
// smoothing marginals, the fixed-parameter streaming statistic, the
// auxiliary-function cross-check, and the marginal likelihood.
std::vector<OracleCheckResult> run_oracle_suite(uint64_t seed, int n_instances);

}  // namespace hil::oracle

#endif  // HIL_ORACLE_HPP
