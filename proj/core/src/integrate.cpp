#include "centra/integrate.hpp"

#include <algorithm>
#include <cmath>

namespace centra {

namespace {

// Dormand-Prince 5(4) coefficients.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// b - bhat
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// Dense output weights (Hairer, Norsett, Wanner).
constexpr double d1 = -12715105075.0 / 11282082432.0;
constexpr double d3 = 87487479700.0 / 32700410799.0;
constexpr double d4 = -10690763975.0 / 1880347072.0;
constexpr double d5 = 701980252875.0 / 199316789632.0;
constexpr double d6 = -1453857185.0 / 822651844.0;
constexpr double d7 = 69997945.0 / 29380423.0;

}  // namespace

Dopri5Stepper::Dopri5Stepper(Rhs rhs, Vec y0, double t0, double t_end,
                             IntegrateOptions opts, const DomainChart* domain,
                             int position_dim)
    : rhs_(std::move(rhs)),
      y_(std::move(y0)),
      t_(t0),
      t_end_(t_end),
      opts_(opts),
      domain_(domain),
      pos_dim_(position_dim) {
  dir_ = (t_end_ >= t_) ? 1.0 : -1.0;
  const auto n = y_.size();
  k1_.resize(n); k2_.resize(n); k3_.resize(n); k4_.resize(n);
  k5_.resize(n); k6_.resize(n); k7_.resize(n);
  y_new_.resize(n); y_err_.resize(n); y_stage_.resize(n);
  if (t_ == t_end_) done_ = true;
  rhs_(t_, y_, k1_);  // FSAL seed
  h_ = initial_step();
  check_domain(y_, t_);
}

double Dopri5Stepper::initial_step() const {
  double span = std::abs(t_end_ - t_);
  if (span == 0) return 0;
  double d0 = y_.norm(), d1n = k1_.norm();
  double h0 = (d1n > 1e-10) ? 0.01 * (1.0 + d0) / d1n : 1e-6;
  h0 = std::min({h0, span, opts_.max_step});
  return std::max(h0, 1e-12);
}

void Dopri5Stepper::check_domain(const Vec& y, double t) const {
  if (!opts_.check_domain || domain_ == nullptr) return;
  if (domain_->kind() != ChartKind::Box) return;
  int d = pos_dim_ > 0 ? pos_dim_ : domain_->dim();
  if (!domain_->contains(y.head(d)))
    fail(Errc::DomainExit, "trajectory left the box chart at t=" + std::to_string(t));
}

bool Dopri5Stepper::step() {
  if (done_) return false;
  const double tol = opts_.tol;
  while (true) {
    if (++n_steps_ > opts_.max_steps)
      fail(Errc::StepFailure, "step budget exhausted");
    double h = std::min(h_, opts_.max_step);
    double remaining = std::abs(t_end_ - t_);
    bool last_step = h >= remaining;
    if (last_step) h = remaining;
    if (h < 1e-14 * std::max(1.0, std::abs(t_))) {
      // Step size underflow, typically while approaching a singularity.
      fail(Errc::StepFailure, "step size underflow at t=" + std::to_string(t_));
    }
    const double hd = dir_ * h;

    y_stage_ = y_ + hd * (a21 * k1_);
    rhs_(t_ + c2 * hd, y_stage_, k2_);
    y_stage_ = y_ + hd * (a31 * k1_ + a32 * k2_);
    rhs_(t_ + c3 * hd, y_stage_, k3_);
    y_stage_ = y_ + hd * (a41 * k1_ + a42 * k2_ + a43 * k3_);
    rhs_(t_ + c4 * hd, y_stage_, k4_);
    y_stage_ = y_ + hd * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_);
    rhs_(t_ + c5 * hd, y_stage_, k5_);
    y_stage_ = y_ + hd * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
    rhs_(t_ + hd, y_stage_, k6_);
    y_new_ = y_ + hd * (b1 * k1_ + b3 * k3_ + b4 * k4_ + b5 * k5_ + b6 * k6_);
    rhs_(t_ + hd, y_new_, k7_);

    y_err_ = hd * (e1 * k1_ + e3 * k3_ + e4 * k4_ + e5 * k5_ + e6 * k6_ + e7 * k7_);
    double err = 0;
    for (Eigen::Index i = 0; i < y_.size(); ++i) {
      double sc = tol + tol * std::max(std::abs(y_[i]), std::abs(y_new_[i]));
      err += sq(y_err_[i] / sc);
    }
    err = std::sqrt(err / double(y_.size()));
    if (!std::isfinite(err)) err = 2.0;

    if (err <= 1.0) {
      // Accept: build the dense interpolant, advance, propose next h.
      last_.t0 = t_;
      last_.t1 = last_step ? t_end_ : t_ + hd;
      last_.c1 = y_;
      last_.c2 = y_new_ - y_;
      last_.c3 = hd * k1_ - last_.c2;
      last_.c4 = last_.c2 - hd * k7_ - last_.c3;
      last_.c5 = hd * (d1 * k1_ + d3 * k3_ + d4 * k4_ + d5 * k5_ + d6 * k6_ + d7 * k7_);
      t_ = last_.t1;
      y_.swap(y_new_);
      k1_.swap(k7_);  // FSAL
      check_domain(y_, t_);
      double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
      h_ = h * std::clamp(fac, 0.2, 5.0);
      if (last_step) done_ = true;
      return true;
    }
    double fac = 0.9 * std::pow(err, -0.2);
    h_ = h * std::clamp(fac, 0.1, 0.9);
  }
}

bool OrbitSegment::covers(double t) const {
  double lo = std::min(t0_, t1_), hi = std::max(t0_, t1_);
  double slack = 1e-9 * (1.0 + hi - lo);
  return t >= lo - slack && t <= hi + slack;
}

Vec OrbitSegment::eval(double t) const {
  if (steps_.empty()) fail(Errc::StepFailure, "empty orbit segment");
  if (!covers(t)) fail(Errc::StepFailure, "dense-output query outside segment");
  // Binary search over monotone step endpoints.
  const bool fwd = t1_ >= t0_;
  std::size_t lo = 0, hi = steps_.size() - 1;
  while (lo < hi) {
    std::size_t mid = (lo + hi) / 2;
    bool after = fwd ? (t > steps_[mid].t1) : (t < steps_[mid].t1);
    if (after)
      lo = mid + 1;
    else
      hi = mid;
  }
  return steps_[lo].eval(t);
}

OrbitSegment integrate_dense(const Rhs& rhs, const Vec& y0, double t0, double t1,
                             const IntegrateOptions& opts, const DomainChart* domain,
                             int position_dim) {
  std::vector<DenseStep> steps;
  if (t0 == t1) {
    DenseStep s;
    s.t0 = s.t1 = t0;
    s.c1 = y0;
    s.c2 = s.c3 = s.c4 = s.c5 = Vec::Zero(y0.size());
    steps.push_back(std::move(s));
    return OrbitSegment(std::move(steps), t0, t1);
  }
  Dopri5Stepper st(rhs, y0, t0, t1, opts, domain, position_dim);
  while (st.step()) steps.push_back(st.last());
  return OrbitSegment(std::move(steps), t0, t1);
}

Rhs field_rhs(const VectorFieldSpec& X) {
  return [&X](double, const Vec& y, Vec& dy) { dy = X(y); };
}

Rhs augmented_rhs(const VectorFieldSpec& X) {
  const int d = X.domain().dim();
  return [&X, d](double, const Vec& y, Vec& dy) {
    Vec x = y.head(d);
    dy.resize(d + d * d);
    dy.head(d) = X(x);
    Mat J = X.jacobian(x);
    Eigen::Map<const Mat> W(y.data() + d, d, d);
    Eigen::Map<Mat> dW(dy.data() + d, d, d);
    dW = J * W;
  };
}

Vec flow(const VectorFieldSpec& X, const Vec& p, double t, double tol) {
  if (t == 0) return p;
  IntegrateOptions opts;
  opts.tol = tol;
  OrbitSegment seg = flow_orbit(X, p, 0, t, opts);
  return seg.eval(t);
}

OrbitSegment flow_orbit(const VectorFieldSpec& X, const Vec& p, double t0, double t1,
                        const IntegrateOptions& opts) {
  return integrate_dense(field_rhs(X), p, t0, t1, opts, &X.domain(), X.domain().dim());
}

Mat FlowWithVariational::matrix(double t) const {
  Vec y = seg_.eval(t);
  return Eigen::Map<const Mat>(y.data() + dim_, dim_, dim_);
}

FlowWithVariational variational_orbit(const VectorFieldSpec& X, const Vec& p, double t0,
                                      double t1, const IntegrateOptions& opts) {
  const int d = X.domain().dim();
  Vec y0(d + d * d);
  y0.head(d) = p;
  Eigen::Map<Mat>(y0.data() + d, d, d) = Mat::Identity(d, d);
  OrbitSegment seg =
      integrate_dense(augmented_rhs(X), y0, t0, t1, opts, &X.domain(), d);
  return FlowWithVariational(std::move(seg), d);
}

Mat variational(const VectorFieldSpec& X, const Vec& p, double t, double tol) {
  const int d = X.domain().dim();
  if (t == 0) return Mat::Identity(d, d);
  IntegrateOptions opts;
  opts.tol = tol;
  return variational_orbit(X, p, 0, t, opts).matrix(t);
}

Vec lie_bracket(const VectorFieldSpec& X, const VectorFieldSpec& Y, const Vec& p) {
  Mat DX = X.jacobian(p);
  Mat DY = Y.jacobian(p);
  Vec v = DY * X(p) - DX * Y(p);
  if (!v.allFinite()) fail(Errc::JacobianUnavailable, "non-finite bracket value");
  return v;
}

}  // namespace centra
