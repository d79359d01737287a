#pragma once

#include <stdexcept>
#include <string>

namespace icdlab {

// Bad input, broken invariant or inconsistent configuration.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace icdlab
