#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace centra {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Failure modes surfaced to callers. CLI maps these to machine-readable
// error JSON on stderr with exit code 1.
enum class Errc {
  DomainExit,
  StepFailure,
  SingularPoint,
  NoHit,
  Tangency,
  IllConditioned,
  CalibrationFailed,
  InfeasibleBudget,
  InjectivityFailure,
  EpsilonExceeded,
  HypothesisUnverified,
  RationalRotation,
  InvarianceViolated,
  UnknownEntry,
  JacobianUnavailable,
  BadConfig,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

// Seeded generator with a portable uniform mapping (the raw 64-bit stream of
// mt19937_64 is specified by the standard; the mapping below avoids the
// implementation-defined std::uniform_real_distribution).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed), seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  double uniform() {  // [0, 1)
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Uniform in the closed ball of given radius (rejection from the cube).
  Vec ball(int dim, double radius) {
    Vec v(dim);
    while (true) {
      for (int i = 0; i < dim; ++i) v[i] = uniform(-1.0, 1.0);
      if (v.squaredNorm() <= 1.0) return radius * v;
    }
  }

 private:
  std::mt19937_64 eng_;
  std::uint64_t seed_;
};

inline double sq(double x) { return x * x; }

}  // namespace centra
