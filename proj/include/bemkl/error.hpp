#ifndef BEMKL_ERROR_HPP
#define BEMKL_ERROR_HPP

#include <stdexcept>
#include <string>

namespace bemkl {

/// Malformed or incompatible file contents.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Factorization failure or a non-finite quantity during inference.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bemkl

#endif  // BEMKL_ERROR_HPP
