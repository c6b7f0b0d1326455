#pragma once

#include <stdexcept>
#include <string>

namespace rcd {

/// Malformed input or a violated data invariant. Maps to CLI exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A model could not be fitted or sampled for one set.
class ModelError : public std::runtime_error {
 public:
  enum class Kind {
    insufficient_replication,
    degenerate_data,
    no_convergence,
    singular_information,
    not_positive_semidefinite,
    invalid_argument,
  };

  ModelError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  [[nodiscard]] Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace rcd
