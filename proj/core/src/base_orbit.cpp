#include "centra/base_orbit.hpp"

#include <Eigen/LU>
#include <cmath>

namespace centra {

BaseOrbit::BaseOrbit(const VectorFieldSpec& X, Vec p, double t_lo, double t_hi,
                     double tol)
    : X_(&X), p_(std::move(p)), t_lo_(t_lo), t_hi_(t_hi), d_(X.domain().dim()) {
  IntegrateOptions opts;
  opts.tol = tol;
  if (t_hi_ > 0) fwd_ = variational_orbit(X, p_, 0, t_hi_, opts);
  if (t_lo_ < 0) bwd_ = variational_orbit(X, p_, 0, t_lo_, opts);
  if (t_hi_ <= 0 && t_lo_ >= 0) fwd_ = variational_orbit(X, p_, 0, 0, opts);
}

Vec BaseOrbit::aug_state(double t) const {
  if (t < 0 && t_lo_ < 0) return bwd_.segment().eval(t);
  return fwd_.segment().eval(t);
}

Vec BaseOrbit::point(double t) const { return aug_state(t).head(d_); }

Vec BaseOrbit::point_wrapped(double t) const { return X_->domain().wrap(point(t)); }

Vec BaseOrbit::velocity(double t) const { return (*X_)(point(t)); }

NormalFrame BaseOrbit::frame(double t) const { return normal_frame(*X_, point(t)); }

Mat BaseOrbit::W(double t) const {
  Vec y = aug_state(t);
  return Eigen::Map<const Mat>(y.data() + d_, d_, d_);
}

Mat BaseOrbit::P(double t) const {
  NormalFrame f0 = frame(0), ft = frame(t);
  return ft.E.transpose() * W(t) * f0.E;
}

Mat BaseOrbit::P_between(double s, double t) const {
  if (s == 0) return P(t);
  NormalFrame fs = frame(s), ft = frame(t);
  // E_t^T W(t) W(s)^{-1} E_s; the flow-direction discrepancy dies under the
  // final projection, so this equals P(t) P(s)^{-1} in the fixed frames.
  Mat Ws = W(s);
  Mat rhs = Ws.partialPivLu().solve(fs.E);
  return ft.E.transpose() * (W(t) * rhs);
}

Vec BaseOrbit::du_dt(double t) const {
  Vec c = point(t);
  Vec v = (*X_)(c);
  double nv = v.norm();
  if (nv < X_->zero_tolerance()) fail(Errc::SingularPoint, "du/dt at singular point");
  Vec u = v / nv;
  Vec a = X_->jacobian(c) * v;  // d/dt X(X_t(p))
  return (a - u * (u.dot(a))) / nv;
}

SectionTarget BaseOrbit::section(double t, double radius) const {
  Vec c = point(t);
  Vec v = (*X_)(c);
  double nv = v.norm();
  if (nv < X_->zero_tolerance()) fail(Errc::SingularPoint, "section at singular point");
  return {c, v / nv, radius};
}

}  // namespace centra
