#pragma once

// Run configuration file: flat `key = value` lines grouped in [sections].
// Every key has a default, so an empty file is a valid configuration.

#include "gobrem/mdp/beam_mdp.hpp"
#include "gobrem/sim.hpp"

#include <iosfwd>
#include <string>

namespace gobrem {

struct SolverConfig {
  double beta = 1.0;
  double gamma = 0.9;
  double tol = 1e-6;
  int max_rounds = 1000;
};

struct RunConfig {
  sim::ScenarioConfig scenario;
  sim::ChannelConfig channel;
  sim::RemConfig rem;
  SolverConfig solver;
  double fallback_delta_ho = 5.0;  // xApp rule for states the policy does not cover
  std::string output_dir = "out";

  /// Throws ConfigError on any out-of-range value.
  void validate() const;

  mdp::RewardParams reward_params() const;
  mdp::TrainingOptions training_options() const;

  /// Canonical text: every section and key in fixed order.
  std::string to_string() const;
  std::string checksum() const;

  /// Throws ConfigError on syntax errors, unknown sections or keys and
  /// invalid values.
  static RunConfig parse(const std::string& text);
};

RunConfig read_config_file(const std::string& path);

}  // namespace gobrem
