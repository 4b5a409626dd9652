#ifndef HIL_BATCH_EM_HPP
#define HIL_BATCH_EM_HPP

#include <vector>

#include "hil/policy.hpp"
#include "hil/regularizers.hpp"
#include "hil/types.hpp"

namespace hil {

// Forward/backward variables and smoothed marginals for one trajectory.
// Rows are renormalized at every step; the retained log-normalizers of the
// forward pass sum to the marginal log-likelihood.
struct SmoothingTables {
  long T = 0;
  int n_options = 0;
  std::vector<double> alpha;  // T x O x 2
  std::vector<double> beta;   // T x O x 2
  std::vector<double> gamma;  // T x O x 2, P(O_t, B_t | data)
  // (T-1) x O x 2, row i holds time t = i + 2, indexed (o_{t-1}, b_t).
  std::vector<double> xi;
  std::vector<double> log_normalizers;  // T

  double marginal_log_likelihood() const;

  double g(long t, OptionId o, Bit b) const {  // t is 1-based
    return gamma[((t - 1) * n_options + o) * 2 + b];
  }
  double x(long t, OptionId o_prev, Bit b) const {  // t in [2, T]
    return xi[((t - 2) * n_options + o_prev) * 2 + b];
  }
};

enum class MStepKind { ClosedFormTabular, Gradient };

struct BatchConfig {
  int n_iterations = 20;
  MStepKind mstep = MStepKind::ClosedFormTabular;
  int gradient_steps = 50;
  int minibatch = 32;
  double learning_rate = 1e-2;

  void validate() const;
};

SmoothingTables forward_backward(const HierarchicalPolicy& policy, const Trajectory& trajectory);
SmoothingTables forward_backward(const PolicyTables& tables, const Trajectory& trajectory);

// In-place variant that reuses the table buffers across calls (the EM loop
// smooths the same trajectories every iteration).
void forward_backward_into(SmoothingTables& out, const PolicyTables& tables,
                           const Trajectory& trajectory);

// EM auxiliary function evaluated at the candidate parameters, weights
// taken from tables computed under the previous parameters. The initial
// termination term is dropped by default; include_initial_termination
// restores it (the t = 1 weights come from gamma_1), which makes the value
// the complete auxiliary function.
double batch_q(const HierarchicalPolicy& policy_new, const SmoothingTables& tables,
               const Trajectory& trajectory, bool include_initial_termination = false);

// Same, summed across trajectories with 1/T using the total step count.
double batch_q_total(const HierarchicalPolicy& policy_new,
                     const std::vector<SmoothingTables>& tables,
                     const std::vector<Trajectory>& trajectories,
                     bool include_initial_termination = false);

// Weighted log-term form of the batch auxiliary function for the gradient
// M-step; `scale` multiplies every weight (1/T for the full objective).
void append_batch_terms(WeightedLogTerms& out, const SmoothingTables& tables,
                        const Trajectory& trajectory, const ModelDims& dims, long t,
                        double scale);

// Closed-form tabular maximizer from smoothed counts. Rows never visited
// keep their previous conditional. With include_initial_termination the
// t = 1 termination weights enter the pi_b counts and the result maximizes
// the complete auxiliary function (exact EM).
PolicyParams tabular_m_step(const std::vector<SmoothingTables>& tables,
                            const std::vector<Trajectory>& trajectories,
                            const HierarchicalPolicy& previous,
                            bool include_initial_termination = true);

struct BatchIterLog {
  int iteration = 0;
  double loglik = 0.0;
  double q_value = 0.0;
  double wall_ms = 0.0;
};

struct BatchResult {
  HierarchicalPolicy policy;
  std::vector<BatchIterLog> log;
};

// Algorithm: N alternations of forward-backward smoothing and the chosen
// M-step; per-iteration rows report the post-M-step log-likelihood.
BatchResult run_batch_bw(const std::vector<Trajectory>& trajectories, const BatchConfig& config,
                         HierarchicalPolicy initial, const RegularizerConfig& penalties,
                         uint64_t seed);

}  // namespace hil

#endif  // HIL_BATCH_EM_HPP
