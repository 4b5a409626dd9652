#ifndef HIL_CHECKPOINT_HPP
#define HIL_CHECKPOINT_HPP

#include <string>

#include "hil/policy.hpp"

namespace hil {

// Versioned JSON checkpoint holding kind, dims, network spec, the state
// feature table and the flat parameter blocks. Serialization is
// deterministic and doubles round-trip exactly.
void save_checkpoint(const std::string& path, const HierarchicalPolicy& policy);
HierarchicalPolicy load_checkpoint(const std::string& path);

std::string checkpoint_to_string(const HierarchicalPolicy& policy);
HierarchicalPolicy checkpoint_from_string(const std::string& text);

}  // namespace hil

#endif  // HIL_CHECKPOINT_HPP
