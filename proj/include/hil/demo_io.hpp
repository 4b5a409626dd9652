#ifndef HIL_DEMO_IO_HPP
#define HIL_DEMO_IO_HPP

#include <string>

#include "hil/env.hpp"

namespace hil {

// Demonstration file: line 1 is a JSON header
//   {"version":1,"n_states":...,"n_actions":...,"env":"<name>"}
// followed by one `episode,t,state,action` row per step (base-10 integers,
// 0-based episode, 1-based t, '\n' line ends, no trailing spaces).
void write_demo_file(const std::string& path, const DemonstrationSet& demos);
DemonstrationSet read_demo_file(const std::string& path);

std::string demo_to_string(const DemonstrationSet& demos);
DemonstrationSet demo_from_string(const std::string& text);

}  // namespace hil

#endif  // HIL_DEMO_IO_HPP
