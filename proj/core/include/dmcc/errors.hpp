#pragma once

#include <stdexcept>
#include <string>

namespace dmcc {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Attitude too close to the cos(theta) = 0 singularity of the Euler-rate map.
struct SingularAttitude : Error {
  using Error::Error;
};

struct NotNormalized : Error {
  using Error::Error;
};

struct NoConvergence : Error {
  NoConvergence(const std::string& what, int iters, double resid)
      : Error(what), iterations(iters), residual(resid) {}
  int iterations;
  double residual;
};

struct ValidationError : Error {
  explicit ValidationError(const std::string& field_path, const std::string& what)
      : Error(field_path + ": " + what), field(field_path) {}
  std::string field;
};

struct UnknownPreset : Error {
  using Error::Error;
};

struct NotTrained : Error {
  using Error::Error;
};

struct ParseError : Error {
  using Error::Error;
};

}  // namespace dmcc
