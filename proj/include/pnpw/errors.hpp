#pragma once

#include <stdexcept>
#include <string>

namespace pnpw {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand lengths or image shapes disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A domain object could not be built from the supplied parameters.
class ConstructionError : public Error {
 public:
  using Error::Error;
};

// An iterative or factorization routine failed.
class NumericError : public Error {
 public:
  using Error::Error;
};

// A dense path was requested for a problem that is too large.
class SizeError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void require_same_size(std::ptrdiff_t a, std::ptrdiff_t b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": length mismatch (" + std::to_string(a) +
                         " vs " + std::to_string(b) + ")");
  }
}

}  // namespace detail
}  // namespace pnpw
