#pragma once

#include <stdexcept>
#include <string>

namespace manin {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed structural input: bad Cartan data, singular blocks, shape mismatches.
class StructuralError : public Error {
 public:
  using Error::Error;
};

// Input outside the mathematical domain of an operation (m_alpha <= 0, s <= 1, det = 0, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Work estimate or counter range exceeded. Never accompanied by a partial result.
class ResourceGuardError : public Error {
 public:
  using Error::Error;
};

// An internal mathematical invariant failed; indicates a bug, not bad input.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace manin
