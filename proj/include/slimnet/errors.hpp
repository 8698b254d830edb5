#pragma once

#include <stdexcept>
#include <string>

namespace slimnet {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

// An argument is outside its documented domain (negative std, n < 2, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Inconsistent or incomplete configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// I/O, parse, format and consistency failures while reading data files.
class DataError : public Error {
 public:
  using Error::Error;
};

// Non-finite values produced during training or evaluation.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Pruning would leave a layer without neurons.
class DegenerateNetworkError : public Error {
 public:
  using Error::Error;
};

}  // namespace slimnet
