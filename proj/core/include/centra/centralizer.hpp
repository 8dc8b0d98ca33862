#pragma once

#include <optional>
#include <string>
#include <vector>

#include "centra/poincare.hpp"

namespace centra {

// ---- commutation ------------------------------------------------------------

struct CommutationReport {
  std::string grid_description;
  double max_bracket = 0;       // sup |[X,Y]| over the grid
  double max_flow_residual = 0; // sup |Y(X_t x) - DX_t(x) Y(x)| over grid x t-grid
  double tolerance = 0;
  bool verdict = false;
  int errors = 0;  // samples whose integration failed (recorded, not fatal)
};

CommutationReport commutation_residual(const VectorFieldSpec& X, const VectorFieldSpec& Y,
                                       const std::vector<Vec>& grid,
                                       const std::vector<double>& t_grid,
                                       double tolerance = 1e-6, double tol = 1e-10);

// |Y(p) - pi_X(p, Y(p)) X(p)| / (1 + |Y(p)|); 0 at singular p iff Y(p) = 0.
double collinearity_defect(const VectorFieldSpec& X, const VectorFieldSpec& Y,
                           const Vec& p);

// pi_X(p, Y(p)) = <X,Y>/<X,X>; the collinearity function of Y = fX.
double recover_f(const VectorFieldSpec& X, const VectorFieldSpec& Y, const Vec& p);

// max over the t-grid of |f(X_t(p)) - f(p)|.
double invariance_residual(const ScalarFieldSpec& f, const VectorFieldSpec& X,
                           const Vec& p, const std::vector<double>& t_grid,
                           double tol = 1e-10);

// ---- normal distortion --------------------------------------------------------

struct DistortionRecord {
  Vec x, y;
  int N = 0;
  std::vector<double> delta;        // Delta_1..Delta_reached
  std::vector<double> logdet_x, logdet_y;
  int reached = 0;                  // last index computed
  std::string error;                // failure reason when reached < N
};

DistortionRecord normal_distortion(const VectorFieldSpec& X, const Vec& x, const Vec& y,
                                   int N, double tol = 1e-10);

struct UndPairResult {
  Vec x, y;
  std::optional<int> min_n;  // min { n <= N : Delta_n > K }
  double max_delta = 0;
  std::string error;
};

struct UndReport {
  double K = 0;
  int N = 0;
  std::uint64_t seed = 0;
  std::vector<UndPairResult> pairs;
  int achieved = 0;
};

// Pair sampler draws from the declared wandering region; pairs on (nearly)
// the same orbit are rejected by the same-orbit search.
UndReport und_probe(const VectorFieldSpec& X, Rng& rng, int num_pairs, double K, int N,
                    const std::function<bool(const Vec&)>& wandering,
                    double offset_scale = 0.2, double tol = 1e-9);

// ---- expansivity probes ---------------------------------------------------------

struct SeparationWitness {
  Vec x, y;
  double eps = 0, T = 0;
  double max_distance = 0;        // over t in [-T, T]
  bool same_orbit = false;
  double reparam_s = 0;           // s with X_s(x) ~ y when same_orbit
  bool non_separating = false;    // stayed below eps and not on the same orbit
  bool trapped_certified = false; // both ends inside matching trapping balls
  std::string error;
};

struct SeparatingReport {
  double eps = 0, T = 0;
  std::uint64_t seed = 0;
  std::string sampler;
  std::vector<SeparationWitness> results;
  int witnesses = 0;
};

enum class PairSampler { IndependentUniform, Offset };

SeparatingReport separating_probe(const VectorFieldSpec& X, double eps, double T,
                                  int num_pairs, Rng& rng, PairSampler sampler,
                                  double offset_scale = 0.05, double tol = 1e-9,
                                  const std::function<bool(const Vec&)>& region = nullptr);

struct KinematicCase {
  Vec x, y;
  double delta = 0;
  double max_distance = 0;
  bool stayed_close = false;
  bool same_orbit = false;
  double reparam_s = 0;
  bool failure = false;  // kinematic-expansivity failure at (delta, T)
  std::string reason;
};

struct KinematicReport {
  double eps = 0, T = 0;
  std::vector<double> delta_grid;
  std::uint64_t seed = 0;
  std::vector<KinematicCase> cases;
  int failures = 0;
};

KinematicReport kinematic_probe(const VectorFieldSpec& X, double eps,
                                const std::vector<double>& delta_grid, double T,
                                const std::vector<std::pair<Vec, Vec>>& pairs,
                                double tol = 1e-9, std::uint64_t seed = 0);

// Bounded reparametrization search: min over |s| <= s_max of d(X_s(x), y),
// coarse grid plus golden-section refinement.
struct SameOrbitResult {
  bool same_orbit = false;
  double s = 0;
  double distance = 0;
};
SameOrbitResult same_orbit_search(const VectorFieldSpec& X, const Vec& x, const Vec& y,
                                  double s_max, double threshold = 1e-8,
                                  double tol = 1e-10);

// ---- saddle gradient decay -------------------------------------------------------

struct GradientDecayReport {
  Vec sigma;
  std::vector<double> radii;
  std::vector<double> sup_grad;  // sup over the sphere samples of |grad f|
  bool monotone = false;
};

GradientDecayReport gradient_decay_probe(const ScalarFieldSpec& f, const VectorFieldSpec& X,
                                         const Vec& sigma, const std::vector<double>& radii,
                                         int sphere_samples = 64,
                                         double invariance_tol = 1e-6);

// ---- Denjoy-Koksma deviations ------------------------------------------------------

struct BirkhoffDeviationReport {
  double theta = 0;
  double T = 0;  // equidistributed average of tau
  std::vector<long long> denominators;  // q_1..q_K from the continued fraction
  std::vector<double> deviation;        // sup_x |sum_{l<q_n} tau(f^l x) - T q_n|
  int grid_points = 0;
};

// Continued-fraction denominators of theta; throws RationalRotation when the
// expansion terminates within the requested depth.
std::vector<long long> continued_fraction_denominators(double theta, int K);

BirkhoffDeviationReport birkhoff_deviation(const std::function<double(double)>& tau,
                                           double theta, int K, int grid_points = 256);

}  // namespace centra
