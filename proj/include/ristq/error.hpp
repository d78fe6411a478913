// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace ristq {

// All library failures derive from Error so callers can catch one type.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
  public:
    using Error::Error;
};

class NotHermitianError : public Error {
  public:
    using Error::Error;
};

class NotPsdError : public Error {
  public:
    using Error::Error;
};

class SingularMatrixError : public Error {
  public:
    using Error::Error;
};

class InfeasibleError : public Error {
  public:
    using Error::Error;
};

class ConfigError : public Error {
  public:
    using Error::Error;
};

class ModeMismatchError : public Error {
  public:
    using Error::Error;
};

class NonFiniteInputError : public Error {
  public:
    using Error::Error;
};

} // namespace ristq
