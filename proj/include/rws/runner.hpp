#pragma once

#include <iosfwd>
#include <string>

#include "rws/config.hpp"
#include "rws/functionals.hpp"

namespace rws {

enum class RunStatus : int {
  kOk = 0,           // all theorem-backed checks passed
  kCheckFailed = 1,  // some check failed
  kInvalid = 2,      // invalid configuration or refused experiment
};

// Build the functional selected by name in the configuration.
FunctionalSpec make_functional(const std::string& name, double strike,
                               double horizon, std::uint32_t mc_inner_count);

// Execute one subcommand (or "all"), writing CSV tables, summary.json and
// manifest.json into the configured output directory. Progress and refusal
// messages go to `log`.
RunStatus run(const std::string& subcommand, const ExperimentConfig& config,
              std::ostream& log);

}  // namespace rws
