#ifndef DMPF_ERRORS_HPP
#define DMPF_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace dmpf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a covariance cannot be factorized even after the jittered retry.
class NotPositiveDefinite : public Error {
 public:
  explicit NotPositiveDefinite(const std::string& what) : Error("not positive definite: " + what) {}
};

class EmptyEnsemble : public Error {
 public:
  explicit EmptyEnsemble(const std::string& what) : Error("empty ensemble: " + what) {}
};

/// Sample covariance with 1/(M-1) normalization needs at least two points.
class SingleParticle : public Error {
 public:
  explicit SingleParticle(const std::string& what) : Error("single particle: " + what) {}
};

/// A model map was evaluated outside its domain (e.g. a nonpositive radicand).
class NumericalDomain : public Error {
 public:
  explicit NumericalDomain(const std::string& what) : Error("numerical domain: " + what) {}
};

/// Every importance weight vanished; the observation is incompatible with all particles.
class AllWeightsZero : public Error {
 public:
  explicit AllWeightsZero(const std::string& what) : Error("all weights zero: " + what) {}
};

class ShapeMismatch : public Error {
 public:
  explicit ShapeMismatch(const std::string& what) : Error("shape mismatch: " + what) {}
};

/// Invalid configuration: unknown keys, malformed values, unknown models.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("config: " + what) {}
};

}  // namespace dmpf

#endif  // DMPF_ERRORS_HPP
