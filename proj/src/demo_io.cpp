#include "hil/demo_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace hil {

using nlohmann::json;

std::string demo_to_string(const DemonstrationSet& demos) {
  json header;
  header["version"] = 1;
  header["n_states"] = demos.n_states;
  header["n_actions"] = demos.n_actions;
  header["env"] = demos.env_name;

  std::string out = header.dump();
  out.push_back('\n');
  char line[96];
  for (size_t e = 0; e < demos.episodes.size(); ++e) {
    for (size_t t = 0; t < demos.episodes[e].size(); ++t) {
      const Step& st = demos.episodes[e][t];
      const int n = std::snprintf(line, sizeof line, "%zu,%zu,%d,%d\n", e, t + 1, st.state,
                                  st.action);
      out.append(line, n);
    }
  }
  return out;
}

DemonstrationSet demo_from_string(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("demo file: empty");

  DemonstrationSet out;
  try {
    const json header = json::parse(line);
    if (header.at("version").get<int>() != 1)
      throw ConfigError("demo file: unsupported version");
    out.n_states = header.at("n_states").get<int>();
    out.n_actions = header.at("n_actions").get<int>();
    out.env_name = header.at("env").get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("demo file: bad header: ") + e.what());
  }

  long line_no = 1;
  long prev_episode = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    long fields[4];
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (int f = 0; f < 4; ++f) {
      auto [ptr, ec] = std::from_chars(p, end, fields[f]);
      if (ec != std::errc())
        throw ConfigError("demo file: malformed row at line " + std::to_string(line_no));
      p = ptr;
      if (f < 3) {
        if (p >= end || *p != ',')
          throw ConfigError("demo file: malformed row at line " + std::to_string(line_no));
        ++p;
      }
    }
    if (p != end) throw ConfigError("demo file: trailing junk at line " + std::to_string(line_no));
    const long episode = fields[0];
    if (episode != prev_episode) {
      if (episode != prev_episode + 1)
        throw ConfigError("demo file: episodes must be consecutive at line " +
                          std::to_string(line_no));
      out.episodes.emplace_back();
      prev_episode = episode;
    }
    if (fields[1] != static_cast<long>(out.episodes.back().size()) + 1)
      throw ConfigError("demo file: step index out of order at line " + std::to_string(line_no));
    if (fields[2] < 0 || fields[2] >= out.n_states || fields[3] < 0 ||
        fields[3] >= out.n_actions)
      throw ConfigError("demo file: id out of range at line " + std::to_string(line_no));
    out.episodes.back().push_back(
        {static_cast<StateId>(fields[2]), static_cast<ActionId>(fields[3])});
  }
  return out;
}

void write_demo_file(const std::string& path, const DemonstrationSet& demos) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("write_demo_file: cannot open " + path);
  out << demo_to_string(demos);
  if (!out) throw ConfigError("write_demo_file: write failed for " + path);
}

DemonstrationSet read_demo_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("read_demo_file: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return demo_from_string(text);
}

}  // namespace hil
