#pragma once

#include "centra/poincare.hpp"

namespace centra {

// Dense augmented orbit of a base point with frames and linear Poincare flow
// read off the interpolant. Shared by the linearizing coordinates and the
// tube realization machinery.
class BaseOrbit {
 public:
  BaseOrbit(const VectorFieldSpec& X, Vec p, double t_lo, double t_hi,
            double tol = 1e-11);

  const VectorFieldSpec& field() const { return *X_; }
  const Vec& base() const { return p_; }
  double t_lo() const { return t_lo_; }
  double t_hi() const { return t_hi_; }

  Vec point(double t) const;        // unwrapped chart state
  Vec point_wrapped(double t) const;
  Vec velocity(double t) const;     // X(X_t(p))
  NormalFrame frame(double t) const;
  Mat W(double t) const;            // DX_t(p)

  // (d-1)x(d-1) matrix of P^X_{p,t} from frame(0) to frame(t).
  Mat P(double t) const;
  // P^X_{X_s(p), t-s} from frame(s) to frame(t).
  Mat P_between(double s, double t) const;
  double logabsdet_P(double t) const { return logabsdet_qr(P(t)); }

  // d/dt of the unit flow direction along the base orbit.
  Vec du_dt(double t) const;

  SectionTarget section(double t, double radius) const;

 private:
  const VectorFieldSpec* X_;
  Vec p_;
  double t_lo_, t_hi_;
  FlowWithVariational fwd_, bwd_;
  int d_;

  Vec aug_state(double t) const;
};

}  // namespace centra
