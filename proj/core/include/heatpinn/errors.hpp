#pragma once

#include <stdexcept>
#include <string>

namespace heatpinn {

// Violated precondition (length mismatch, wrong dimensionality, bad config value).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Query outside the valid range of a profile, field history, or trained window.
class DomainError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Non-finite values produced during evaluation, training, or a solve.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unknown derivative label in an evaluation request.
class RequestError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Corrupt or truncated checkpoint/CSV content.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace heatpinn
