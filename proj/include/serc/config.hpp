#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

#include "serc/channel.hpp"
#include "serc/experiment.hpp"
#include "serc/pipeline.hpp"
#include "serc/remote_backend.hpp"

namespace serc {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Settings file contents. Sections: [backend], [retriever], [pipeline], [noise].
struct Settings {
  std::string backend = "oracle";  // oracle | remote
  RemoteConfig remote;
  PipelineConfig pipeline;
  EpisodeConfig episode;  // [noise] also carries the codeword shape
  std::uint64_t seed = 42;
};

using TomlValue = std::variant<bool, std::int64_t, double, std::string>;
using TomlTable = std::map<std::string, std::map<std::string, TomlValue>>;

/// Parses the subset of TOML used by settings files: [section] headers,
/// `key = value` with basic strings, integers, floats and booleans, and
/// '#' comments. Anything else is a ConfigError naming the line.
TomlTable parse_toml(std::string_view text);

/// Applies a parsed table onto `settings`. Unknown sections or keys are errors.
void apply_settings(const TomlTable& table, Settings& settings);

Settings load_settings(const std::string& path);
Settings parse_settings(std::string_view text);

}  // namespace serc
