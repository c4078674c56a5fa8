#pragma once

#include <stdexcept>
#include <string>

namespace hevdp {

// Bad input files, malformed configs, inconsistent parameters.
// The command line tool maps these to exit code 2.
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// A well-formed problem that admits no solution (empty control set at some
// step, unreachable terminal window, rollout off the grid). Exit code 1.
class InfeasibleError : public std::runtime_error {
  public:
    explicit InfeasibleError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace hevdp
