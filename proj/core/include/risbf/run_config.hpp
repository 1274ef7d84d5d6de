#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "risbf/channel.hpp"
#include "risbf/network.hpp"
#include "risbf/sdr.hpp"

namespace risbf {

/// Resolved run configuration: built-in defaults, overlaid by a line-oriented
/// "key = value" config file ('#' starts a comment), overlaid by CLI flags.
struct RunConfig {
  ScenarioConfig scenario;
  TrainConfig train;
  SolverOptions solver;
  uint64_t seed = 42;
  int threads = 0;

  /// Applies one key/value pair; throws std::invalid_argument naming the key
  /// when it is unknown or its value does not parse.
  void apply(const std::string& key, const std::string& value);

  /// Parses and applies a config file. Throws std::invalid_argument with the
  /// offending line/key, std::runtime_error when unreadable.
  void apply_file(const std::string& path);

  /// Every key accepted by apply().
  static const std::vector<std::string>& known_keys();

  /// "key = value" lines of the fully resolved configuration, for echoing
  /// into output artifacts.
  std::vector<std::string> echo() const;

  void validate() const;
};

}  // namespace risbf
