#include "hil/types.hpp"

#include <cmath>

namespace hil {

void ModelDims::validate() const {
  if (n_states < 1) throw DimensionError("ModelDims: n_states must be >= 1");
  if (n_actions < 1) throw DimensionError("ModelDims: n_actions must be >= 1");
  if (n_options < 1) throw DimensionError("ModelDims: n_options must be >= 1");
}

void Trajectory::validate(const ModelDims& dims) const {
  if (steps.empty()) throw ShapeError("Trajectory: length must be >= 1");
  if (initial_option < 0 || initial_option >= dims.n_options)
    throw DimensionError("Trajectory: initial_option out of range");
  for (const Step& st : steps) {
    if (st.state < 0 || st.state >= dims.n_states)
      throw DimensionError("Trajectory: state id out of range");
    if (st.action < 0 || st.action >= dims.n_actions)
      throw DimensionError("Trajectory: action id out of range");
  }
}

void StateTable::validate(const ModelDims& dims) const {
  if (feature_dim < 1) throw DimensionError("StateTable: feature_dim must be >= 1");
  if (static_cast<int>(features.size()) != dims.n_states * feature_dim)
    throw DimensionError("StateTable: expected one feature row per state");
  if (!labels.empty() && static_cast<int>(labels.size()) != dims.n_states)
    throw DimensionError("StateTable: labels must be empty or one per state");
  for (double v : features)
    if (!std::isfinite(v)) throw NumericError("StateTable: non-finite feature");
}

StateTable StateTable::identity_features(int n_states) {
  StateTable t;
  t.feature_dim = n_states;
  t.features.assign(static_cast<size_t>(n_states) * n_states, 0.0);
  for (int s = 0; s < n_states; ++s) t.features[static_cast<size_t>(s) * n_states + s] = 1.0;
  return t;
}

}  // namespace hil
