#pragma once

#include <stdexcept>

namespace dinr {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor or parameter shapes do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A NaN or Inf showed up where a finite value is required.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

// Misuse of a compute graph (stale graph, non-scalar loss, ...).
class GraphError : public Error {
 public:
  using Error::Error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Training or reconstruction produced a non-finite loss.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace dinr
