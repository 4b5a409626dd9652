#ifndef HIL_ONLINE_EM_HPP
#define HIL_ONLINE_EM_HPP

#include <vector>

#include "hil/batch_em.hpp"
#include "hil/policy.hpp"
#include "hil/types.hpp"

namespace hil {

// The streaming filter chi_T over the current option and the auxiliary
// statistic rho_T conditioned on it. rho is dense over the explored
// state/action sets, which grow as new ids appear in the stream.
class OnlineStatistics {
 public:
  OnlineStatistics(const ModelDims& dims, std::vector<double> prior);

  const ModelDims& dims() const { return dims_; }
  long t() const { return t_; }
  const std::vector<double>& chi() const { return chi_; }
  const std::vector<double>& rho() const { return rho_; }

  int n_state_slots() const { return static_cast<int>(slot_state_.size()); }
  int n_action_slots() const { return static_cast<int>(slot_action_.size()); }
  StateId slot_state(int slot) const { return slot_state_[slot]; }
  ActionId slot_action(int slot) const { return slot_action_[slot]; }
  std::vector<StateId> explored_states() const;    // sorted global ids
  std::vector<ActionId> explored_actions() const;  // sorted global ids

  // rho(o_prev, b, o, state slot, action slot, o_last)
  double rho_at(OptionId op, Bit b, OptionId o, int s_slot, int a_slot, OptionId o_last) const;
  double rho_mass(OptionId o_last) const;  // sum over the first five indices
  double chi_normalization() const;

  // One recursion step for the new pair (s, a); rho is updated with the
  // pre-update chi, then chi itself.
  void update(const HierarchicalPolicy& policy, StateId s, ActionId a);

  // Test hook: overwrite chi (used by fault-injection checks).
  void set_chi_for_test(std::vector<double> chi);

 private:
  int slot_for_state(StateId s);
  int slot_for_action(ActionId a);
  void grow(int new_s_cap, int new_a_cap);
  size_t rho_index(OptionId op, Bit b, OptionId o, int s_slot, int a_slot, OptionId o_last) const;

  ModelDims dims_;
  std::vector<double> chi_;
  std::vector<double> rho_;
  long t_ = 0;
  int s_cap_ = 0, a_cap_ = 0;
  std::vector<int> state_slot_;   // global id -> slot or -1
  std::vector<int> action_slot_;  // global id -> slot or -1
  std::vector<StateId> slot_state_;
  std::vector<ActionId> slot_action_;
};

OnlineStatistics init_statistics(const ModelDims& dims, const std::vector<double>& prior);

// Kept as a free function mirroring the recursion listing.
void e_step_update(OnlineStatistics& stats, const HierarchicalPolicy& policy, StateId s,
                   ActionId a);

// The sufficient statistic phi(o_prev, b, o, s, a) = sum_o'' rho * chi.
struct PhiStatistic {
  ModelDims dims;
  std::vector<StateId> slot_state;
  std::vector<ActionId> slot_action;
  std::vector<double> phi;  // (o_prev, b, o, s_slot, a_slot)

  double at(OptionId op, Bit b, OptionId o, int s_slot, int a_slot) const;
  double total_mass() const;
};

PhiStatistic compose_phi(const OnlineStatistics& stats);

// Auxiliary function evaluated from the composed statistic.
double online_q(const HierarchicalPolicy& policy_new, const PhiStatistic& phi);

// Grouped weighted-log-term form of online_q for the gradient M-step.
WeightedLogTerms phi_objective_terms(const PhiStatistic& phi);

// Closed-form tabular maximizer of online_q; unvisited rows keep their
// previous conditional.
PolicyParams tabular_m_step(const PhiStatistic& phi, const HierarchicalPolicy& previous);

struct OnlineConfig {
  long t_min = 100;
  long mstep_every = 1;
  int gradient_steps = 30;
  double learning_rate = 1e-2;
  MStepKind mstep = MStepKind::Gradient;
  // Prior over O_0; empty means uniform. A point prior reproduces the
  // fixed-o_0 conditioning of the batch algorithm.
  std::vector<double> prior;

  void validate() const;
};

struct OnlineStepLog {
  long t = 0;
  bool has_q = false;
  double q_value = 0.0;
  double wall_us = 0.0;
};

struct OnlineResult {
  HierarchicalPolicy policy;
  std::vector<OnlineStepLog> log;
};

// Streaming EM: one e_step_update per sample; after t_min the M-step fires
// every mstep_every samples, maximizing the penalized online_q.
OnlineResult run_online_bw(const std::vector<Step>& stream, const OnlineConfig& config,
                           HierarchicalPolicy initial, const RegularizerConfig& penalties);

}  // namespace hil

#endif  // HIL_ONLINE_EM_HPP
