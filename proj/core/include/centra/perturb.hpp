#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "centra/base_orbit.hpp"
#include "centra/poincare.hpp"

namespace centra {

// ---- bump profiles -----------------------------------------------------------

// Quintic smoothstep ramp: 0 for t <= 0.1, 1 for t >= 0.9, C^1 in between.
struct BumpProfile {
  double chi(double t) const;
  double dchi(double t) const;
  double c1_norm() const { return 1.875 / 0.8; }  // sup |chi'|
};

// Radial diffeomorphism v -> c + m(|v - c|) dir(v - c): linear scaling by
// lambda inside r_in, identity outside r_out, monotone C^1 Hermite ramp in
// between. det D = lambda^d on the inner ball. An amplitude in [0,1] blends
// toward the identity (m_a = (1-a) s + a m(s), still monotone).
class RadialBump {
 public:
  RadialBump() = default;
  RadialBump(Vec center, double r_in, double r_out, double lambda);

  const Vec& center() const { return center_; }
  double r_in() const { return r_in_; }
  double r_out() const { return r_out_; }
  double lambda() const { return lambda_; }

  Vec apply(const Vec& v, double amplitude = 1.0) const;
  Vec invert(const Vec& w, double amplitude = 1.0) const;
  Mat jacobian(const Vec& v, double amplitude = 1.0) const;

  // (g - id) and its derivative bound diagnostics
  double c0_size() const;                 // sup |m(s) - s|
  double c1_size() const;                 // sup max(|m'-1|, |m/s-1|)
  // |log det| gain on the inner ball; contracting bumps (lambda < 1) keep
  // their images inside the support, so the chain never overflows it.
  double logdet_gain(int dim) const { return std::abs(dim * std::log(lambda_)); }

  double m(double s, double a) const;
  double dm(double s, double a) const;

 private:
  Vec center_;
  double r_in_ = 0, r_out_ = 0, lambda_ = 1;
  // Hermite coefficients for the ramp on [r_in, r_out]
  double h_a2_ = 0, h_a3_ = 0;
};

// ---- cocycle perturbation (finite-step distortion construction) --------------

// One level of the perturbed cocycle: w -> A (w + bump displacement).
struct CocycleStep {
  Mat A;
  std::optional<RadialBump> bump;

  Vec apply(const Vec& w) const;
  Vec apply_linear(const Vec& w) const { return A * w; }
  Mat jacobian(const Vec& w) const;
  // A^{-1} g(w) = w + eta(w); identity outside the bump support.
  Vec ghat(const Vec& w) const { return bump ? bump->apply(w) : w; }
};

struct CocycleVerify {
  double c1_distance = 0;    // sup over samples of per-level C1 distance
  double c0_distance = 0;
  bool support_exact = true; // g = f outside the forward images of U
  double min_distortion = 0; // min over Delta samples of max_n |log det diff|
  int worst_n = 0;
  bool pass = false;
};

class CocyclePerturbation {
 public:
  // Builds radial det-bumps spread over as many steps as the eps budget
  // requires to exceed K on all of Delta. matrix(i) supplies A_{i+1}; the
  // construction stops at n1 <= step_cap or reports InfeasibleBudget.
  // eps bounds d_C1(g~_i, A_i); intrinsic_c1_cap additionally bounds the bump
  // derivative itself (the quantity the realized field inherits).
  static CocyclePerturbation build(const std::function<Mat(int)>& matrix, int dim,
                                   const Vec& u_center, double u_radius,
                                   const Vec& delta_center, double delta_radius,
                                   double K, double eps, double eta_cap = 1e9,
                                   int step_cap = 64,
                                   double intrinsic_c1_cap = 1e300);

  int n1() const { return n1_; }
  int dim() const { return dim_; }
  double gain_per_step() const { return gain_; }
  double lambda() const { return lambda_; }
  const std::vector<CocycleStep>& steps() const { return steps_; }

  // Composition from level 0 to level n (perturbed / linear).
  Vec orbit(const Vec& w0, int n) const;
  Vec orbit_linear(const Vec& w0, int n) const;
  double logdet_perturbed(const Vec& w0, int n) const;  // log |det Dg^n(w0)|
  double logdet_linear(int n) const;

  // The four Prop-style bullets, by direct finite-difference composition.
  CocycleVerify verify(double K, double eps, int delta_samples, std::uint64_t seed,
                       double fd_step_rel = 1e-6) const;

  Vec u_center() const { return u_center_; }
  double u_radius() const { return u_radius_; }
  Vec delta_center() const { return delta_center_; }
  double delta_radius() const { return delta_radius_; }

 private:
  std::vector<CocycleStep> steps_;
  int n1_ = 0, dim_ = 0;
  double gain_ = 0, lambda_ = 1;
  Vec u_center_, delta_center_;
  double u_radius_ = 0, delta_radius_ = 0;
};

// ---- tube region ---------------------------------------------------------------

struct TubeChart {
  Vec y0_coords;  // source-disk coordinates of the chart point
  double t0 = 0;  // section parameter in [0, n]
};

// Flow tube from the source disk U to the section n steps ahead, with the
// inverse chart computed by backward hitting.
class TubeRegion {
 public:
  TubeRegion(const VectorFieldSpec& X, const Vec& p, double u_radius, int n,
             double alpha, double tol = 1e-11);

  const BaseOrbit& base() const { return *base_; }
  double u_radius() const { return u_radius_; }
  int n() const { return n_; }

  std::optional<TubeChart> chart(const Vec& q) const;
  bool contains(const Vec& q) const { return chart(q).has_value(); }

  // Sampled pairwise injectivity of (y, t) -> X_t(y); throws on failure.
  void certify_injectivity(int y_samples, int t_samples, std::uint64_t seed) const;

  Vec source_point(const Vec& coords) const;
  const NormalFrame& source_frame() const { return frame0_; }

 private:
  const VectorFieldSpec* X_;
  std::shared_ptr<BaseOrbit> base_;
  NormalFrame frame0_;
  double u_radius_;
  int n_;
  double alpha_;
  double tol_;
  Vec bbox_lo_, bbox_hi_;  // conservative bounding box pre-filter
  bool use_bbox_ = false;

  friend class RealizedField;
  friend class Realization;
};

// ---- the perturbation bundle and realization -------------------------------------

struct PerturbationBundle {
  Vec p;
  double u_radius = 0;       // round sub-disk U about the base point
  int n0 = 0;
  std::vector<CocycleStep> gtilde;  // stage maps on the normal spaces
  double delta1 = 0;                // declared C1 bound on d(g~_i, A_i)
};

// Identity bundle: g~_i equal to the linear Poincare steps.
PerturbationBundle identity_bundle(const BaseOrbit& base, double u_radius, int n0);
// Identity bundle with one radial det-bump of scale lambda at the given stage.
PerturbationBundle det_bump_bundle(const BaseOrbit& base, double u_radius, int n0,
                                   int stage, double lambda);

// Disk-map evaluators g_i built through the linearizing coordinates.
class LiftedMaps {
 public:
  LiftedMaps(const VectorFieldSpec& X, std::shared_ptr<BaseOrbit> base,
             PerturbationBundle bundle, double tol = 1e-11);

  // g_i: section (i-1) point -> section i point, i in 1..n0.
  Vec g(int i, const Vec& q) const;
  // In disk coordinates of the stage frames.
  Vec g_coords(int i, const Vec& c) const;
  Mat g_jacobian_coords(int i, const Vec& c, double h) const;

  const PerturbationBundle& bundle() const { return bundle_; }
  const NormalFrame& frame(int i) const { return frames_[i]; }
  const Mat& P(int i) const { return P_[i]; }  // frame(0) -> frame(i)
  Mat P_step(int i) const;  // linear Poincare matrix for stage i in the frames

 private:
  const VectorFieldSpec* X_;
  std::shared_ptr<BaseOrbit> base_;
  PerturbationBundle bundle_;
  std::vector<NormalFrame> frames_;
  std::vector<Mat> P_;  // P(0..n0), frame(0) -> frame(i)
  double tol_;

  friend class RealizedField;
};

// The realized vector field Y: X outside the tube, and inside the tube the
// time-derivative of the chi-interpolated stage maps, evaluated through the
// analytic difference formula. Use as_field() for the VectorFieldSpec surface.
class RealizedField {
 public:
  RealizedField(const VectorFieldSpec& X, const TubeRegion& tube, const LiftedMaps& lifted,
                BumpProfile chi, double eps, double tol = 1e-12);

  Vec eval(const Vec& q) const;
  Mat jacobian_analytic(const Vec& q) const;
  // Difference Y(q) - X(q); exact zero outside the tube or off the bumps.
  Vec difference(const Vec& q) const;

  // Per the external surface: evaluation by the branch formula, Jacobian by
  // central differences unless analytic_jacobian is requested.
  VectorFieldSpec as_field(bool analytic_jacobian = true) const;

  const TubeRegion& tube() const { return *tube_; }
  const LiftedMaps& lifted() const { return *lifted_; }
  double eps() const { return eps_; }

 private:
  const VectorFieldSpec* X_;
  const TubeRegion* tube_;
  const LiftedMaps* lifted_;
  BumpProfile chi_;
  double eps_, tol_;

  struct Inner;  // per-evaluation work data
  bool inner_at(const Vec& q, Inner& out) const;
};

struct RealizeChecks {
  double max_diff_outside = 0;     // exact-zero support check
  double max_poincare_mismatch = 0;  // re-integrated P maps of Y vs g_i
  double d_c1_xy = 0;              // sampled sup |X-Y| + |DX-DY|
  double tau_min = 0, tau_max = 0;
  bool tau_in_band = false;
  bool pass = false;
  std::string detail;
};

// Builds Y from the bundle and numerically verifies the postconditions
// (support, realized Poincare maps, eps budget, hitting-time band).
class Realization {
 public:
  Realization(const VectorFieldSpec& X, const Vec& p, double u_radius, int n0,
              PerturbationBundle bundle, BumpProfile chi, double eps, double alpha,
              double tol = 1e-11);

  const RealizedField& field() const { return *Y_; }
  VectorFieldSpec Y(bool analytic_jacobian = true) const {
    return Y_->as_field(analytic_jacobian);
  }
  const TubeRegion& tube() const { return *tube_; }
  const LiftedMaps& lifted() const { return *lifted_; }

  RealizeChecks verify(int disk_samples, std::uint64_t seed, double poincare_tol = 1e-6,
                       int outside_samples = 32) const;

 private:
  const VectorFieldSpec* X_;
  std::shared_ptr<BaseOrbit> base_;
  std::unique_ptr<TubeRegion> tube_;
  std::unique_ptr<LiftedMaps> lifted_;
  std::unique_ptr<RealizedField> Y_;
  double alpha_, eps_, tol_;
};

Realization realize(const VectorFieldSpec& X, const Vec& p, double u_radius, int n0,
                    PerturbationBundle bundle, const BumpProfile& chi, double eps,
                    double alpha, double tol = 1e-11);

// ---- the full pipeline -------------------------------------------------------------

struct DistortPairOptions {
  double eta = 0.05;          // C0 cap on the per-step Poincare perturbation
  double avoid_horizon = 0;   // orbit-avoidance horizon for x (default: n0 + 2)
  int delta_samples = 25;
  std::uint64_t seed = 2026;
  int step_cap = 40;
  double tol = 1e-11;
  // Declared sample sets for the certificates; generic inset grids otherwise.
  std::vector<Vec> certificate_grid;
  std::vector<Vec> calibration_points;
};

struct DistortPairReport {
  int n0 = 0;
  double K = 0, eps = 0, eta = 0;
  double C = 0, alpha = 0, beta = 0;
  double u_radius = 0, delta_radius = 0;
  // the five conclusions
  bool support_in_tube = false;
  double d_c1_xy = 0;
  bool c1_ok = false;
  double per_step_c1 = 0, delta_cert = 0;
  bool per_step_ok = false;
  double per_step_c0 = 0;
  bool c0_ok = false;
  int distortion_achieved = 0, distortion_total = 0;
  double min_max_distortion = 0;
  bool distortion_ok = false;
  bool pass = false;
  std::string detail;
};

// Proposition-8 style pipeline: certificates -> cocycle perturbation -> lift ->
// realize -> verification of the five conclusions at sampled points of Delta.
DistortPairReport distort_pair(const VectorFieldSpec& X, const Vec& p,
                               double delta_radius, const Vec& x, double K, double eps,
                               const DistortPairOptions& opts = {});

}  // namespace centra
