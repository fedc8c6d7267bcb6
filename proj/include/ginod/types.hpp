#ifndef GINOD_TYPES_HPP
#define GINOD_TYPES_HPP

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ginod {

using Eigen::MatrixXd;
using Eigen::VectorXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad or inconsistent configuration / input tables.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Mismatched sizes between arguments.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Numerical failure inside a solver (singular system, divergence, NaN).
class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace ginod

#endif  // GINOD_TYPES_HPP
