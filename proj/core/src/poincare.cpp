#include "centra/poincare.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/LU>

#include "centra/base_orbit.hpp"

namespace centra {

NormalFrame normal_frame(const VectorFieldSpec& X, const Vec& p) {
  Vec v = X(p);
  double nv = v.norm();
  if (nv < X.zero_tolerance())
    fail(Errc::SingularPoint, "normal frame requested at a singular point");
  const int d = static_cast<int>(p.size());
  NormalFrame f;
  f.p = p;
  f.u = v / nv;
  f.field_norm = nv;
  // Seed basis: canonical axes. Drop the one most parallel to u, then
  // Gram-Schmidt the rest in index order.
  int drop = 0;
  for (int j = 1; j < d; ++j)
    if (std::abs(f.u[j]) > std::abs(f.u[drop])) drop = j;
  f.E.resize(d, d - 1);
  int col = 0;
  for (int j = 0; j < d; ++j) {
    if (j == drop) continue;
    Vec e = Vec::Zero(d);
    e[j] = 1.0;
    e -= f.u * f.u[j];
    for (int k = 0; k < col; ++k) e -= f.E.col(k) * f.E.col(k).dot(e);
    double ne = e.norm();
    if (ne < 1e-12) fail(Errc::IllConditioned, "degenerate frame seed");
    f.E.col(col++) = e / ne;
  }
  return f;
}

double logabsdet_qr(const Mat& M) {
  if (M.rows() == 1 && M.cols() == 1) return std::log(std::abs(M(0, 0)));
  Eigen::HouseholderQR<Mat> qr(M);
  double s = 0;
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    s += std::log(std::abs(qr.matrixQR()(i, i)));
  return s;
}

LinearPoincareOp linear_poincare(const VectorFieldSpec& X, const Vec& p, double t,
                                 double tol) {
  IntegrateOptions opts;
  opts.tol = tol;
  FlowWithVariational fv = variational_orbit(X, p, 0, t, opts);
  LinearPoincareOp op;
  op.t = t;
  op.source = normal_frame(X, p);
  op.target = normal_frame(X, fv.state(t));
  Mat W = fv.matrix(t);
  op.M = op.target.E.transpose() * W * op.source.E;
  op.logabsdet = logabsdet_qr(op.M);
  return op;
}

SectionDisk section_disk(const VectorFieldSpec& X, const Vec& p, double radius) {
  if (radius >= X.domain().injectivity_radius())
    fail(Errc::BadConfig, "section radius must stay below the injectivity radius");
  return SectionDisk{normal_frame(X, p), radius};
}

// ---- hitting --------------------------------------------------------------

namespace {

struct HitScan {
  const VectorFieldSpec& X;
  const SectionTarget& target;
  const HitOptions& opts;
  int d;
  double wrap_guard;  // reject sign flips from torus wrap jumps

  double s_of(const Vec& y) const {
    return X.domain().displacement(target.center, y.head(d)).dot(target.u);
  }
  double in_plane(const Vec& y) const {
    Vec w = X.domain().displacement(target.center, y.head(d));
    return (w - target.u * w.dot(target.u)).norm();
  }
};

// Generic scan over an adaptive integration; RhsT picks plain or augmented.
template <typename OnHit>
bool scan_for_hit(const Rhs& rhs, const Vec& y0, const HitScan& sc, double t_min,
                  bool backward, OnHit&& on_hit) {
  const double horizon = sc.opts.horizon;
  IntegrateOptions iopts;
  iopts.tol = sc.opts.tol;
  iopts.max_step = sc.opts.max_step;
  Dopri5Stepper st(rhs, y0, 0, backward ? -horizon : horizon, iopts,
                   &sc.X.domain(), sc.d);

  std::vector<DenseStep> steps;
  auto orbit_eval = [&steps](double t) -> Vec {
    // Steps are stored in time order of traversal; linear scan from the back.
    for (auto it = steps.rbegin(); it != steps.rend(); ++it) {
      double lo = std::min(it->t0, it->t1), hi = std::max(it->t0, it->t1);
      if (t >= lo - 1e-15 && t <= hi + 1e-15) return it->eval(t);
    }
    return steps.back().eval(t);
  };

  double prev_t = 0;
  double prev_s = sc.s_of(y0);

  // Immediate membership at t = 0.
  if (std::abs(prev_s) < 1e-14 && t_min <= 0 && sc.in_plane(y0) <= sc.target.radius) {
    if (on_hit(0.0, y0)) return true;
  }

  const int K = 8;
  while (st.step()) {
    steps.push_back(st.last());
    const DenseStep& ds = st.last();
    for (int k = 1; k <= K; ++k) {
      double tk = ds.t0 + (ds.t1 - ds.t0) * k / double(K);
      Vec yk = ds.eval(tk);
      double sk = sc.s_of(yk);
      bool flip = (prev_s < 0 && sk >= 0) || (prev_s > 0 && sk <= 0);
      bool guard_ok = sc.wrap_guard <= 0 || (std::abs(prev_s) < sc.wrap_guard &&
                                             std::abs(sk) < sc.wrap_guard);
      if (flip && guard_ok) {
        double ta = prev_t, tb = tk, sa = prev_s;
        for (int it = 0; it < 200 && std::abs(tb - ta) > sc.opts.time_tol; ++it) {
          double tm = 0.5 * (ta + tb);
          double sm = sc.s_of(orbit_eval(tm));
          if ((sa < 0 && sm < 0) || (sa > 0 && sm > 0)) {
            ta = tm;
            sa = sm;
          } else {
            tb = tm;
          }
        }
        double th = 0.5 * (ta + tb);
        bool past_min = backward ? (th <= -t_min + 1e-12) : (th >= t_min - 1e-12);
        if (past_min) {
          Vec yh = orbit_eval(th);
          if (sc.in_plane(yh) <= sc.target.radius) {
            Vec xv = sc.X(yh.head(sc.d));
            double trans = std::abs(xv.dot(sc.target.u));
            if (trans < sc.opts.tangency_floor * xv.norm())
              fail(Errc::Tangency, "crossing too shallow at t=" + std::to_string(th));
            if (on_hit(th, yh)) return true;
          }
        }
      }
      prev_t = tk;
      prev_s = sk;
    }
  }
  return false;
}

double wrap_guard_for(const VectorFieldSpec& X) {
  if (X.domain().kind() != ChartKind::Torus) return -1;
  return 0.3 * X.domain().periods().minCoeff();
}

}  // namespace

HitResult first_hit(const VectorFieldSpec& X, const Vec& q, const SectionTarget& target,
                    const HitOptions& opts, double t_min, bool backward) {
  HitScan sc{X, target, opts, X.domain().dim(), wrap_guard_for(X)};
  HitResult res;
  bool found = scan_for_hit(field_rhs(X), q, sc, t_min, backward,
                            [&](double t, const Vec& y) {
                              res.tau = t;
                              res.unwrapped = y;
                              res.point = X.domain().wrap(y);
                              return true;
                            });
  if (!found)
    fail(Errc::NoHit, "no section crossing before horizon " + std::to_string(opts.horizon));
  return res;
}

HitWithMatrix first_hit_variational(const VectorFieldSpec& X, const Vec& q,
                                    const SectionTarget& target, const HitOptions& opts,
                                    double t_min, bool backward) {
  const int d = X.domain().dim();
  Vec y0(d + d * d);
  y0.head(d) = q;
  Eigen::Map<Mat>(y0.data() + d, d, d) = Mat::Identity(d, d);
  HitScan sc{X, target, opts, d, wrap_guard_for(X)};
  HitWithMatrix res;
  bool found = scan_for_hit(augmented_rhs(X), y0, sc, t_min, backward,
                            [&](double t, const Vec& y) {
                              res.hit.tau = t;
                              res.hit.unwrapped = y.head(d);
                              res.hit.point = X.domain().wrap(y.head(d));
                              res.W = Eigen::Map<const Mat>(y.data() + d, d, d);
                              return true;
                            });
  if (!found)
    fail(Errc::NoHit, "no section crossing before horizon " + std::to_string(opts.horizon));
  return res;
}

// ---- nonlinear Poincare map ------------------------------------------------

std::pair<Vec, double> PoincareMapNum::evaluate(const Vec& q) const {
  HitResult h = first_hit(*X_, q, target_of(target_), opts_, 0.0, false);
  return {h.point, h.tau};
}

std::pair<Vec, double> PoincareMapNum::evaluate_coords(const Vec& c) const {
  Vec q = source_.point(c, X_->domain());
  auto [img, tau] = evaluate(q);
  return {target_.coords(img, X_->domain()), tau};
}

Mat PoincareMapNum::jacobian_coords(const Vec& c, double h) const {
  const int m = static_cast<int>(c.size());
  Mat J(m, m);
  Vec e = Vec::Zero(m);
  for (int j = 0; j < m; ++j) {
    e[j] = h;
    Vec fp = evaluate_coords(c + e).first;
    Vec fm = evaluate_coords(c - e).first;
    e[j] = 0;
    J.col(j) = (fp - fm) / (2 * h);
  }
  return J;
}

PoincareMapNum poincare_map(const VectorFieldSpec& X, const Vec& p, double n,
                            double horizon, double source_radius, double target_radius,
                            double tol) {
  Vec pn = flow(X, p, n, tol);
  SectionDisk src = section_disk(X, p, source_radius);
  SectionDisk tgt = section_disk(X, X.domain().wrap(pn), target_radius);
  HitOptions opts;
  opts.tol = tol;
  opts.horizon = horizon > 0 ? horizon : n + 2;
  return PoincareMapNum(X, std::move(src), std::move(tgt), n, opts);
}

// ---- boundedness certificate -----------------------------------------------

namespace {

double spectral_norm(const Mat& M) {
  Eigen::JacobiSVD<Mat> svd(M);
  return svd.singularValues()(0);
}
double smallest_singular(const Mat& M) {
  Eigen::JacobiSVD<Mat> svd(M);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

}  // namespace

BoundednessCertificate boundedness_certificate(const VectorFieldSpec& X,
                                               const std::vector<Vec>& grid,
                                               const std::vector<double>& t_grid,
                                               double tol) {
  BoundednessCertificate cert;
  double a = 0, b = 0, c_hi = 0, c_lo = 1e300, d_hi = 0, d_lo = 1e300, e_hi = 0,
         e_lo = 1e300;
  IntegrateOptions iopts;
  iopts.tol = tol;

  int used = 0;
  for (const Vec& p : grid) {
    if (X.is_singular(p)) {
      ++cert.skipped_singular;
      continue;
    }
    ++used;
    a = std::max(a, X(p).norm());
    b = std::max(b, spectral_norm(X.jacobian(p)));
    try {
      double tmin = *std::min_element(t_grid.begin(), t_grid.end());
      double tmax = *std::max_element(t_grid.begin(), t_grid.end());
      FlowWithVariational fwd = variational_orbit(X, p, 0, std::max(0.0, tmax), iopts);
      FlowWithVariational bwd = variational_orbit(X, p, 0, std::min(0.0, tmin), iopts);
      NormalFrame fp = normal_frame(X, p);
      for (double t : t_grid) {
        const FlowWithVariational& fv = t >= 0 ? fwd : bwd;
        Mat W = fv.matrix(t);
        c_hi = std::max(c_hi, spectral_norm(W));
        c_lo = std::min(c_lo, smallest_singular(W));
        Vec xt = fv.state(t);
        if (X.is_singular(xt)) continue;
        NormalFrame ft = normal_frame(X, xt);
        Mat P = ft.E.transpose() * W * fp.E;
        d_hi = std::max(d_hi, spectral_norm(P));
        d_lo = std::min(d_lo, smallest_singular(P));
      }
    } catch (const Error&) {
      ++cert.skipped_singular;  // flow left the chart or hit a zero; skip sample
      continue;
    }
  }

  // Condition (e): Poincare-map derivatives over unit time on a sample subset.
  int stride = std::max<std::size_t>(1, grid.size() / 4);
  int e_used = 0;
  for (std::size_t i = 0; i < grid.size() && e_used < 4; i += stride) {
    const Vec& p = grid[i];
    if (X.is_singular(p)) continue;
    try {
      double r = 0.02 * X(p).norm();
      double tr = std::min(0.45 * X.domain().injectivity_radius(), 1.0);
      PoincareMapNum pm = poincare_map(X, p, 1.0, 3.0, r, tr, tol);
      const int m = X.domain().dim() - 1;
      for (int k = 0; k < 2; ++k) {
        Vec c = Vec::Zero(m);
        if (k == 1) c[0] = 0.5 * r;
        Mat J = pm.jacobian_coords(c, std::max(1e-7, 1e-3 * r));
        e_hi = std::max(e_hi, spectral_norm(J));
        e_lo = std::min(e_lo, smallest_singular(J));
      }
      ++e_used;
    } catch (const Error&) {
      continue;
    }
  }
  if (e_used == 0) {
    e_hi = d_hi;  // fall back on the linear Poincare bounds
    e_lo = d_lo;
  }

  if (used == 0) fail(Errc::SingularPoint, "no nonsingular samples for certificate");

  double C = 1.0 + 1e-9;
  for (double v : {a, b, c_hi, 1.0 / c_lo, d_hi, 1.0 / d_lo, e_hi, 1.0 / e_lo})
    if (std::isfinite(v)) C = std::max(C, v);
  cert.C = 1.05 * C;
  cert.conditions["a"] = a;
  cert.conditions["b"] = b;
  cert.conditions["c"] = std::max(c_hi, 1.0 / c_lo);
  cert.conditions["d"] = std::max(d_hi, 1.0 / d_lo);
  cert.conditions["e"] = std::max(e_hi, 1.0 / e_lo);
  std::ostringstream os;
  os << grid.size() << " grid points, " << t_grid.size()
     << " t-values in [-1,1]; spectral operator norm";
  cert.sample_description = os.str();
  return cert;
}

std::string BoundednessCertificate::json() const {
  std::ostringstream os;
  os.precision(17);
  os << "{\"C\": " << C << ", \"alpha\": " << alpha << ", \"beta\": " << beta
     << ", \"conditions\": {";
  bool first = true;
  for (const auto& [k, v] : conditions) {
    if (!first) os << ", ";
    os << "\"" << k << "\": " << v;
    first = false;
  }
  os << "}, \"samples\": \"" << sample_description << "\"}";
  return os.str();
}

// ---- calibration ------------------------------------------------------------

BandReport hitting_time_bounds_check(const VectorFieldSpec& X, const Vec& p, double n,
                                     int num_samples, double alpha, double beta, double C,
                                     std::uint64_t seed, double radius_scale,
                                     double horizon) {
  BandReport rep;
  rep.n = n;
  rep.alpha = alpha;
  rep.seed = seed;
  rep.band_lo = n - alpha;
  rep.band_hi = n + alpha;
  double nx = X(p).norm();
  rep.radius = radius_scale * beta * nx / std::pow(C, n);

  SectionDisk src = section_disk(X, p, std::min(rep.radius * 1.0001,
                                                0.99 * X.domain().injectivity_radius()));
  Vec pn = flow(X, p, n, 1e-11);
  SectionTarget tgt{X.domain().wrap(pn), X(pn).normalized(),
                    X.domain().injectivity_radius()};
  HitOptions hopts;
  hopts.tol = 1e-10;
  hopts.max_step = std::max(alpha / 4, 1e-3);
  hopts.horizon = horizon > 0 ? horizon : n + alpha + 2;

  Rng rng(seed);
  const int m = X.domain().dim() - 1;
  for (int i = 0; i < num_samples; ++i) {
    BandSample s;
    s.coords = rng.ball(m, rep.radius);
    try {
      Vec q = src.point(s.coords, X.domain());
      HitResult h = first_hit(X, q, tgt, hopts);
      s.tau = h.tau;
      s.pass = (s.tau >= rep.band_lo - 1e-9 && s.tau <= rep.band_hi + 1e-9);
      if (!s.pass) ++rep.violations;
    } catch (const Error& e) {
      s.error = e.what();
      ++rep.errors;
    }
    rep.samples.push_back(std::move(s));
  }
  rep.pass = (rep.violations == 0 && rep.errors == 0);
  return rep;
}

Calibration calibrate(const VectorFieldSpec& X, BoundednessCertificate& cert,
                      const std::vector<Vec>& band_points, int band_n_max,
                      int band_samples, std::uint64_t seed) {
  // alpha sweep over {2^-1, ..., 2^-12}: largest value keeping |det P - 1|
  // under log(2)/2 on all samples. |det| makes the condition frame invariant.
  const double bound = 0.5 * std::log(2.0);
  double alpha = 0;
  for (int k = 1; k <= 12 && alpha == 0; ++k) {
    double a = std::pow(2.0, -k);
    bool ok = true;
    for (const Vec& p : band_points) {
      if (X.is_singular(p)) continue;
      for (double frac : {1.0, 0.5, 0.25}) {
        for (double sgn : {1.0, -1.0}) {
          try {
            LinearPoincareOp op = linear_poincare(X, p, sgn * frac * a, 1e-10);
            if (std::abs(std::exp(op.logabsdet) - 1.0) >= bound) ok = false;
          } catch (const Error&) {
            ok = false;
          }
          if (!ok) break;
        }
        if (!ok) break;
      }
      if (!ok) break;
    }
    if (ok) alpha = a;
  }
  if (alpha == 0) fail(Errc::CalibrationFailed, "no alpha in the 2^-k grid passed");

  double R = X.domain().injectivity_radius();
  double C = cert.C;
  double beta = std::min(10.0 * alpha * C, R) / (2.0 * C);
  bool ok = false;
  for (int iter = 0; iter < 30 && !ok; ++iter) {
    ok = true;
    for (const Vec& p : band_points) {
      if (X.is_singular(p)) continue;
      for (int n = 1; n <= band_n_max; ++n) {
        try {
          BandReport rep =
              hitting_time_bounds_check(X, p, n, band_samples, alpha, beta, C, seed + n);
          if (!rep.pass) ok = false;
        } catch (const Error& e) {
          // Base orbits that leave a truncated box chart cannot calibrate at
          // this horizon; other failures count against beta.
          if (e.code() != Errc::DomainExit) ok = false;
        }
        if (!ok) break;
      }
      if (!ok) break;
    }
    if (!ok) beta *= 0.5;
  }
  if (!ok) fail(Errc::CalibrationFailed, "hitting-time band never passed while shrinking beta");
  cert.alpha = alpha;
  cert.beta = beta;
  return {alpha, beta};
}

// ---- linearizing coordinates -------------------------------------------------

struct PsiCoordinates::Impl {
  const VectorFieldSpec* X;
  BaseOrbit base;
  std::vector<SectionDisk> disks;  // stages 0..n
  std::vector<Mat> P;              // P(i), frame(0) -> frame(i)
  HitOptions hopts;

  Impl(const VectorFieldSpec& Xf, const Vec& p, int n, double rho, double tol)
      : X(&Xf), base(Xf, p, -0.5, n + 0.5, tol) {
    hopts.tol = tol;
    hopts.max_step = 0.25;
    for (int i = 0; i <= n; ++i) {
      Mat Pi = base.P(double(i));
      double growth = (i == 0) ? 1.0 : spectral_norm(Pi);
      double r = rho * (2.0 * growth + 1.0);
      disks.push_back(SectionDisk{base.frame(double(i)),
                                  std::min(r, 0.9 * Xf.domain().injectivity_radius())});
      P.push_back(std::move(Pi));
    }
  }
};

PsiCoordinates::PsiCoordinates(const VectorFieldSpec& X, const Vec& p, int n, double rho,
                               double tol)
    : impl_(std::make_unique<Impl>(X, p, n, rho, tol)), n_(n), rho_(rho) {}
PsiCoordinates::~PsiCoordinates() = default;
PsiCoordinates::PsiCoordinates(PsiCoordinates&&) noexcept = default;
PsiCoordinates& PsiCoordinates::operator=(PsiCoordinates&&) noexcept = default;

const SectionDisk& PsiCoordinates::section(int i) const { return impl_->disks.at(i); }

Vec PsiCoordinates::forward(int i, const Vec& q) const {
  const auto& I = *impl_;
  if (i == 0) return I.disks[0].coords(q, I.X->domain());
  HitOptions o = I.hopts;
  o.horizon = i + 1.0;
  SectionTarget src{I.disks[0].frame.p, I.disks[0].frame.u, 3.0 * I.disks[0].radius};
  HitResult h = first_hit(*I.X, q, src, o, std::max(0.0, i - 1.0), true);
  Vec y0 = I.disks[0].coords(h.point, I.X->domain());
  return I.P[i] * y0;
}

Vec PsiCoordinates::inverse(int i, const Vec& w) const {
  const auto& I = *impl_;
  if (i == 0) return I.disks[0].point(w, I.X->domain());
  Vec y0c = I.P[i].partialPivLu().solve(w);
  Vec y0 = I.disks[0].point(y0c, I.X->domain());
  HitOptions o = I.hopts;
  o.horizon = i + 1.0;
  SectionTarget tgt{I.disks[i].frame.p, I.disks[i].frame.u, 3.0 * I.disks[i].radius};
  HitResult h = first_hit(*I.X, y0, tgt, o, std::max(0.0, i - 1.0), false);
  return h.unwrapped;
}

Mat PsiCoordinates::d_forward(int i, const Vec& q, double h) const {
  const auto& I = *impl_;
  const int m = I.X->domain().dim() - 1;
  const SectionDisk& disk = I.disks[i];
  Vec c0 = disk.coords(q, I.X->domain());
  Mat J(m, m);
  Vec e = Vec::Zero(m);
  for (int j = 0; j < m; ++j) {
    e[j] = h;
    Vec wp = forward(i, disk.point(c0 + e, I.X->domain()));
    Vec wm = forward(i, disk.point(c0 - e, I.X->domain()));
    e[j] = 0;
    J.col(j) = (wp - wm) / (2 * h);
  }
  return J;
}

Mat PsiCoordinates::d_inverse(int i, const Vec& w, double h) const {
  const auto& I = *impl_;
  const int m = I.X->domain().dim() - 1;
  const SectionDisk& disk = I.disks[i];
  Mat J(m, m);
  Vec e = Vec::Zero(m);
  for (int j = 0; j < m; ++j) {
    e[j] = h;
    Vec qp = disk.coords(I.X->domain().wrap(inverse(i, w + e)), I.X->domain());
    Vec qm = disk.coords(I.X->domain().wrap(inverse(i, w - e)), I.X->domain());
    e[j] = 0;
    J.col(j) = (qp - qm) / (2 * h);
  }
  return J;
}

double PsiCoordinates::Quantities::max_all() const {
  return std::max(std::max(dpsi, dpsi_inv), std::max(det, det_inv));
}

PsiCoordinates::Quantities PsiCoordinates::quantities(int i, int num_samples,
                                                      std::uint64_t seed) const {
  const auto& I = *impl_;
  const int m = I.X->domain().dim() - 1;
  Rng rng(seed);
  Quantities q;
  HitOptions o = I.hopts;
  o.horizon = i + 1.5;
  double h = std::max(1e-8, 1e-3 * rho_);
  for (int s = 0; s < num_samples; ++s) {
    Vec c0 = rng.ball(m, 0.8 * rho_);
    Vec y0 = I.disks[0].point(c0, I.X->domain());
    Vec qi;
    if (i == 0) {
      qi = y0;
    } else {
      SectionTarget tgt{I.disks[i].frame.p, I.disks[i].frame.u, 3.0 * I.disks[i].radius};
      qi = first_hit(*I.X, y0, tgt, o, std::max(0.0, i - 1.0), false).point;
    }
    Mat J = d_forward(i, qi, h);
    double smax = spectral_norm(J);
    double smin = smallest_singular(J);
    if (smin <= 0 || smax / smin > 1e8)
      fail(Errc::IllConditioned, "lifted Poincare map condition number exceeds 1e8");
    double det = std::abs(J.determinant());
    q.dpsi = std::max(q.dpsi, smax);
    q.dpsi_inv = std::max(q.dpsi_inv, 1.0 / smin);
    q.det = std::max(q.det, det);
    q.det_inv = std::max(q.det_inv, 1.0 / det);
  }
  return q;
}

}  // namespace centra
