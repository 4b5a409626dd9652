#ifndef HIL_OPGM_HPP
#define HIL_OPGM_HPP

#include <vector>

#include "hil/env.hpp"
#include "hil/policy.hpp"
#include "hil/types.hpp"

namespace hil {

// Augmented high-level policy: samples pi_hi when the previous option
// terminated, otherwise copies it.
double tilde_pi_hi(const HierarchicalPolicy& policy, OptionId o, OptionId o_prev, StateId s,
                   Bit b);

// Log-probability of a fully specified trajectory-latent pair. Environment
// transitions enter only when a transition kernel is supplied; they are
// theta-independent and excluded from all training objectives.
double joint_log_prob(const HierarchicalPolicy& policy, const Trajectory& trajectory,
                      const std::vector<LatentStep>& latents,
                      const Environment* transition = nullptr);

// log P(actions | states, o_0, s_1) via the normalized forward recursion;
// the theta-independent transition product is excluded. Returns -inf for
// trajectories with probability zero.
double marginal_log_likelihood(const HierarchicalPolicy& policy, const Trajectory& trajectory);

struct RolloutResult {
  Trajectory trajectory;
  std::vector<LatentStep> latents;
  double total_reward = 0.0;
};

// Hierarchical sampling in order b_t, o_t, a_t, s_{t+1}; ends at a terminal
// state (truncated, valid) or after `horizon` steps.
RolloutResult rollout(const HierarchicalPolicy& policy, const Environment& env, OptionId o0,
                      StateId s1, int horizon, Rng& rng);

}  // namespace hil

#endif  // HIL_OPGM_HPP
