#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace onseg {

using Point = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Rng = std::mt19937_64;

// Error hierarchy. The CLI maps ConfigError to exit code 2 and DataError to 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

// predict/update called out of order
class ProtocolError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

inline bool all_finite(const Point& x) { return x.allFinite(); }

inline void require_dimension(const Point& x, int d, const char* what) {
  if (x.size() != d) {
    throw ConfigError(std::string(what) + ": dimension mismatch (got " +
                      std::to_string(x.size()) + ", expected " + std::to_string(d) + ")");
  }
}

}  // namespace onseg
