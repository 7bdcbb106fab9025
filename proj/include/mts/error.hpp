#pragma once

#include <stdexcept>
#include <string>

namespace mts {

// Malformed input: bad files, invalid trees, parameters out of range.
// The CLI maps this to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numerical invariant of the dynamics was broken (nonfinite values, step
// underflow, unbracketed multiplier). Indicates a bug or a pathological input.
class InvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The exact offline oracle refuses instances beyond its size budget.
class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mts
