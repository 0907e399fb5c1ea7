#pragma once

#include <stdexcept>
#include <string>

namespace ous {

// Bad scalar argument (b <= 0, rate outside (0,1), ...).
class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Structurally bad input: mismatched lengths, unsorted logs, malformed rows.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InvalidProbability : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A caller broke a sequencing contract, e.g. drove a policy out of order.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ous
