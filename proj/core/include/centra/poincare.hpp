#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "centra/integrate.hpp"

namespace centra {

// Orthonormal basis of N_{X,p}, the orthogonal complement of the flow
// direction. Deterministic rule: seed with the canonical axes, drop the axis
// most parallel to u, Gram-Schmidt the rest in index order.
struct NormalFrame {
  Vec p;             // base point
  Vec u;             // X(p)/|X(p)|
  Mat E;             // d x (d-1), columns e_1..e_{d-1}
  double field_norm = 0;

  Vec coords(const Vec& v_ambient) const { return E.transpose() * v_ambient; }
  Vec ambient(const Vec& c) const { return E * c; }
};

NormalFrame normal_frame(const VectorFieldSpec& X, const Vec& p);

double logabsdet_qr(const Mat& M);

// Matrix of the linear Poincare flow P^X_{p,t} between the deterministic
// frames at p and X_t(p); |det| is frame independent.
struct LinearPoincareOp {
  NormalFrame source, target;
  Mat M;
  double logabsdet = 0;
  double t = 0;
};

LinearPoincareOp linear_poincare(const VectorFieldSpec& X, const Vec& p, double t,
                                 double tol = 1e-10);

// Transverse disk exp_p(N_{X,p}(r)).
struct SectionDisk {
  NormalFrame frame;
  double radius = 0;

  Vec point(const Vec& c, const DomainChart& dom) const {
    return dom.exp(frame.p, frame.ambient(c));
  }
  Vec coords(const Vec& q, const DomainChart& dom) const {
    return frame.coords(dom.displacement(frame.p, q));
  }
};

SectionDisk section_disk(const VectorFieldSpec& X, const Vec& p, double radius);

// ---- hitting-time machinery ----------------------------------------------

struct SectionTarget {
  Vec center;
  Vec u;           // unit normal = flow direction at center
  double radius;   // in-plane acceptance radius
};

inline SectionTarget target_of(const SectionDisk& disk) {
  return {disk.frame.p, disk.frame.u, disk.radius};
}

struct HitOptions {
  double tol = 1e-10;          // integration tolerance
  double max_step = 0.25;      // crossing-scan cap (alpha/4 rule)
  double time_tol = 1e-12;     // bisection refinement in t
  double tangency_floor = 1e-6;  // relative transversality floor
  double horizon = 50;
};

struct HitResult {
  Vec point;      // wrapped hit point
  double tau;     // hitting time
  Vec unwrapped;  // chart-unwrapped hit state
};

// First forward crossing (t >= t_min) of the target section by the orbit of q.
// Crossings must pierce the plane in the flow direction and land inside the
// in-plane radius. Throws NoHit / Tangency.
HitResult first_hit(const VectorFieldSpec& X, const Vec& q, const SectionTarget& target,
                    const HitOptions& opts, double t_min = 0.0, bool backward = false);

// Same but along an augmented orbit; returns the hit plus DX_tau(q).
struct HitWithMatrix {
  HitResult hit;
  Mat W;  // DX_tau(q)
};
HitWithMatrix first_hit_variational(const VectorFieldSpec& X, const Vec& q,
                                    const SectionTarget& target, const HitOptions& opts,
                                    double t_min = 0.0, bool backward = false);

// Nonlinear Poincare map between the disks at p and X_n(p).
class PoincareMapNum {
 public:
  PoincareMapNum(const VectorFieldSpec& X, SectionDisk source, SectionDisk target,
                 double n, HitOptions opts)
      : X_(&X), source_(std::move(source)), target_(std::move(target)), n_(n),
        opts_(opts) {}

  // q must lie on the source disk; returns (image point, hitting time tau).
  std::pair<Vec, double> evaluate(const Vec& q) const;
  // Same in source/target disk coordinates.
  std::pair<Vec, double> evaluate_coords(const Vec& c) const;

  const SectionDisk& source() const { return source_; }
  const SectionDisk& target() const { return target_; }
  double n() const { return n_; }

  // Finite-difference Jacobian in disk coordinates.
  Mat jacobian_coords(const Vec& c, double h) const;

 private:
  const VectorFieldSpec* X_;
  SectionDisk source_, target_;
  double n_;
  HitOptions opts_;
};

PoincareMapNum poincare_map(const VectorFieldSpec& X, const Vec& p, double n,
                            double horizon, double source_radius, double target_radius,
                            double tol = 1e-10);

// ---- boundedness and calibration ------------------------------------------

// Uniform bounds (a)-(e): field, derivative, tangent flow, linear Poincare
// flow, and Poincare-map derivatives over unit time. Sample based; the
// operator norm is the spectral norm.
struct BoundednessCertificate {
  double C = 1;
  double alpha = 0;  // filled by calibrate()
  double beta = 0;   // filled by calibrate()
  std::map<std::string, double> conditions;  // attained per condition a..e
  std::string sample_description;
  int skipped_singular = 0;
  std::string json() const;
};

BoundednessCertificate boundedness_certificate(const VectorFieldSpec& X,
                                               const std::vector<Vec>& grid,
                                               const std::vector<double>& t_grid,
                                               double tol = 1e-9);

struct Calibration {
  double alpha = 0;
  double beta = 0;
};

// alpha: largest 2^-k (capped at 1/2) with ||det P_{p,t}| - 1| < log(2)/2 on
// samples for |t| <= alpha. beta: largest value with beta*C <= min(10 a C, R)/2
// whose hitting-time band check passes at the calibration points.
Calibration calibrate(const VectorFieldSpec& X, BoundednessCertificate& cert,
                      const std::vector<Vec>& band_points, int band_n_max = 3,
                      int band_samples = 16, std::uint64_t seed = 1);

struct BandSample {
  Vec coords;
  double tau = 0;
  bool pass = false;
  std::string error;  // empty when the hit succeeded
};

struct BandReport {
  double n = 0, alpha = 0, radius = 0;
  double band_lo = 0, band_hi = 0;
  std::vector<BandSample> samples;
  int violations = 0, errors = 0;
  bool pass = false;
  std::uint64_t seed = 0;
};

// Verifies tau in [n - alpha, n + alpha] for samples on the disk of radius
// (beta / C^n) |X(p)| (times radius_scale).
BandReport hitting_time_bounds_check(const VectorFieldSpec& X, const Vec& p, double n,
                                     int num_samples, double alpha, double beta, double C,
                                     std::uint64_t seed, double radius_scale = 1.0,
                                     double horizon = 0);

// ---- linearizing coordinates ----------------------------------------------

class BaseOrbit;  // base_orbit.hpp

// psi_{p,n} conjugates the lifted Poincare map to the linear Poincare flow
// along the orbit segment X_[0,n](p); Psi = psi o exp^-1.
class PsiCoordinates {
 public:
  PsiCoordinates(const VectorFieldSpec& X, const Vec& p, int n, double rho,
                 double tol = 1e-11);
  ~PsiCoordinates();
  PsiCoordinates(PsiCoordinates&&) noexcept;
  PsiCoordinates& operator=(PsiCoordinates&&) noexcept;

  int n() const { return n_; }
  double rho() const { return rho_; }

  // Psi_{X_i(p),i}: point on section i -> linear coordinates in N_{X_i(p)}.
  Vec forward(int i, const Vec& q) const;
  // Inverse: linear coordinates -> point on section i.
  Vec inverse(int i, const Vec& w) const;

  Mat d_forward(int i, const Vec& q, double h) const;   // FD in section coords
  Mat d_inverse(int i, const Vec& w, double h) const;

  const SectionDisk& section(int i) const;

  struct Quantities {
    double dpsi = 0, dpsi_inv = 0, det = 0, det_inv = 0;
    double max_all() const;
  };
  // Max over sampled disk points of the four linearization quantities at stage i.
  Quantities quantities(int i, int num_samples, std::uint64_t seed) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int n_ = 0;
  double rho_ = 0;
};

}  // namespace centra
