#pragma once

#include <stdexcept>
#include <string>

namespace porobiot {

// Bad user-facing input: counts, extents, unknown ids, malformed config.
class InputError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

class MeshError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Point outside the cell it was evaluated on.
class DomainError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

// Violated model assumptions: non-monotone laws, non-positive permeability.
class AssumptionError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class ConfigurationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class FactorizationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class SolverError : public std::runtime_error {
  public:
    SolverError(const std::string& what, int step = -1)
        : std::runtime_error(what), step_(step) {}
    [[nodiscard]] int step() const noexcept { return step_; }

  private:
    int step_;
};

} // namespace porobiot
