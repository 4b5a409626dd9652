#ifndef HIL_TYPES_HPP
#define HIL_TYPES_HPP

#include <string>
#include <vector>

#include "hil/common.hpp"

namespace hil {

using StateId = int;
using ActionId = int;
using OptionId = int;
using Bit = int;  // termination indicator, 0 or 1

// Cardinalities of the index sets. Termination is always binary.
struct ModelDims {
  int n_states = 0;
  int n_actions = 0;
  int n_options = 0;
  static constexpr int n_term = 2;

  void validate() const;
};

struct Step {
  StateId state = 0;
  ActionId action = 0;
};

struct LatentStep {
  OptionId option = 0;
  Bit termination = 0;
};

// One observed (state, action) sequence. The first state doubles as the
// conditioning initial state; initial_option is the conditioning o_0.
struct Trajectory {
  std::vector<Step> steps;
  OptionId initial_option = 0;
  long episode_id = 0;

  long length() const { return static_cast<long>(steps.size()); }
  void validate(const ModelDims& dims) const;
};

// Per-state feature vectors feeding the MLP heads; tabular policies ignore
// the features but still carry the table.
struct StateTable {
  int feature_dim = 0;
  std::vector<double> features;  // n_states x feature_dim, row-major
  std::vector<std::string> labels;  // optional, empty or n_states entries

  const double* row(StateId s) const { return features.data() + static_cast<size_t>(s) * feature_dim; }
  int n_states() const {
    return feature_dim == 0 ? 0 : static_cast<int>(features.size()) / feature_dim;
  }
  void validate(const ModelDims& dims) const;

  static StateTable identity_features(int n_states);
};

}  // namespace hil

#endif  // HIL_TYPES_HPP
