#include "centra/centralizer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace centra {

CommutationReport commutation_residual(const VectorFieldSpec& X, const VectorFieldSpec& Y,
                                       const std::vector<Vec>& grid,
                                       const std::vector<double>& t_grid,
                                       double tolerance, double tol) {
  CommutationReport rep;
  rep.tolerance = tolerance;
  std::ostringstream os;
  os << grid.size() << " points x " << t_grid.size() << " times";
  rep.grid_description = os.str();

  double tmax = 0, tmin = 0;
  for (double t : t_grid) {
    tmax = std::max(tmax, t);
    tmin = std::min(tmin, t);
  }
  IntegrateOptions opts;
  opts.tol = tol;

  for (const Vec& x : grid) {
    try {
      rep.max_bracket = std::max(rep.max_bracket, lie_bracket(X, Y, x).norm());
      FlowWithVariational fwd = variational_orbit(X, x, 0, tmax, opts);
      FlowWithVariational bwd = variational_orbit(X, x, 0, tmin, opts);
      Vec Yx = Y(x);
      for (double t : t_grid) {
        const FlowWithVariational& fv = t >= 0 ? fwd : bwd;
        Vec lhs = Y(X.domain().wrap(fv.state(t)));
        Vec rhs = fv.matrix(t) * Yx;
        rep.max_flow_residual = std::max(rep.max_flow_residual, (lhs - rhs).norm());
      }
    } catch (const Error&) {
      ++rep.errors;
    }
  }
  rep.verdict = rep.errors == 0 && rep.max_bracket <= tolerance &&
                rep.max_flow_residual <= tolerance;
  return rep;
}

double collinearity_defect(const VectorFieldSpec& X, const VectorFieldSpec& Y,
                           const Vec& p) {
  Vec Xp = X(p), Yp = Y(p);
  double nx = Xp.norm();
  if (nx < X.zero_tolerance()) {
    // At singular points the span condition reduces to Y(p) = 0.
    return Yp.norm() / (1.0 + Yp.norm());
  }
  double pi = Xp.dot(Yp) / Xp.squaredNorm();
  return (Yp - pi * Xp).norm() / (1.0 + Yp.norm());
}

double recover_f(const VectorFieldSpec& X, const VectorFieldSpec& Y, const Vec& p) {
  Vec Xp = X(p);
  if (Xp.norm() < X.zero_tolerance())
    fail(Errc::SingularPoint, "collinearity function undefined at a zero of X");
  return Xp.dot(Y(p)) / Xp.squaredNorm();
}

double invariance_residual(const ScalarFieldSpec& f, const VectorFieldSpec& X,
                           const Vec& p, const std::vector<double>& t_grid, double tol) {
  double tmax = 0, tmin = 0;
  for (double t : t_grid) {
    tmax = std::max(tmax, t);
    tmin = std::min(tmin, t);
  }
  IntegrateOptions opts;
  opts.tol = tol;
  OrbitSegment fwd = flow_orbit(X, p, 0, tmax, opts);
  OrbitSegment bwd = flow_orbit(X, p, 0, tmin, opts);
  double f0 = f(p);
  double res = 0;
  for (double t : t_grid) {
    const OrbitSegment& seg = t >= 0 ? fwd : bwd;
    res = std::max(res, std::abs(f(X.domain().wrap(seg.eval(t))) - f0));
  }
  return res;
}

// ---- normal distortion -----------------------------------------------------

namespace {

// Cumulative log|det P^X_{x,n}| for n = 1..N via unit-time steps; the linear
// Poincare flow composes, so the logs add. Truncates on failure.
struct LogdetSeries {
  std::vector<double> value;
  std::string error;
};

LogdetSeries logdet_series(const VectorFieldSpec& X, const Vec& x0, int N, double tol) {
  LogdetSeries s;
  Vec x = x0;
  double acc = 0;
  for (int n = 1; n <= N; ++n) {
    try {
      LinearPoincareOp op = linear_poincare(X, x, 1.0, tol);
      acc += op.logabsdet;
      s.value.push_back(acc);
      x = X.domain().wrap(flow(X, x, 1.0, tol));
    } catch (const Error& e) {
      s.error = e.what();
      break;
    }
  }
  return s;
}

}  // namespace

DistortionRecord normal_distortion(const VectorFieldSpec& X, const Vec& x, const Vec& y,
                                   int N, double tol) {
  DistortionRecord rec;
  rec.x = x;
  rec.y = y;
  rec.N = N;
  LogdetSeries sx = logdet_series(X, x, N, tol);
  LogdetSeries sy = logdet_series(X, y, N, tol);
  rec.reached = static_cast<int>(std::min(sx.value.size(), sy.value.size()));
  if (!sx.error.empty()) rec.error = sx.error;
  if (!sy.error.empty() && rec.error.empty()) rec.error = sy.error;
  for (int n = 0; n < rec.reached; ++n) {
    rec.logdet_x.push_back(sx.value[n]);
    rec.logdet_y.push_back(sy.value[n]);
    rec.delta.push_back(std::abs(sx.value[n] - sy.value[n]));
  }
  return rec;
}

UndReport und_probe(const VectorFieldSpec& X, Rng& rng, int num_pairs, double K, int N,
                    const std::function<bool(const Vec&)>& wandering,
                    double offset_scale, double tol) {
  UndReport rep;
  rep.K = K;
  rep.N = N;
  rep.seed = rng.seed();
  const DomainChart& dom = X.domain();
  int attempts = 0;
  while (static_cast<int>(rep.pairs.size()) < num_pairs && attempts < 100 * num_pairs) {
    ++attempts;
    Vec x = rng.ball(dom.dim(), 1.0);
    if (dom.kind() == ChartKind::Torus) {
      for (int i = 0; i < dom.dim(); ++i)
        x[i] = (0.5 + 0.5 * x[i]) * dom.periods()[i];
    } else if (dom.kind() == ChartKind::Box) {
      for (int i = 0; i < dom.dim(); ++i)
        x[i] = dom.lower()[i] + (0.5 + 0.5 * x[i]) * (dom.upper()[i] - dom.lower()[i]);
    }
    Vec y = dom.wrap(x + rng.ball(dom.dim(), offset_scale));
    if (X.is_singular(x) || X.is_singular(y)) continue;
    if (wandering && (!wandering(x) || !wandering(y))) continue;
    SameOrbitResult so = same_orbit_search(X, x, y, 2.0, 1e-8, 1e-8);
    if (so.same_orbit) continue;

    UndPairResult pr;
    pr.x = x;
    pr.y = y;
    DistortionRecord rec = normal_distortion(X, x, y, N, tol);
    pr.error = rec.error;
    for (int n = 0; n < rec.reached; ++n) {
      pr.max_delta = std::max(pr.max_delta, rec.delta[n]);
      if (!pr.min_n && rec.delta[n] > K) pr.min_n = n + 1;
    }
    if (pr.min_n) ++rep.achieved;
    rep.pairs.push_back(std::move(pr));
  }
  return rep;
}

// ---- expansivity ------------------------------------------------------------

SameOrbitResult same_orbit_search(const VectorFieldSpec& X, const Vec& x, const Vec& y,
                                  double s_max, double threshold, double tol) {
  SameOrbitResult res;
  IntegrateOptions opts;
  opts.tol = tol;
  opts.check_domain = false;  // the search itself may leave a box chart
  const DomainChart& dom = X.domain();

  OrbitSegment fwd, bwd;
  bool have_fwd = true, have_bwd = true;
  try {
    fwd = flow_orbit(X, x, 0, s_max, opts);
  } catch (const Error&) {
    have_fwd = false;
  }
  try {
    bwd = flow_orbit(X, x, 0, -s_max, opts);
  } catch (const Error&) {
    have_bwd = false;
  }
  auto dist_at = [&](double s) -> double {
    const OrbitSegment* seg =
        s >= 0 ? (have_fwd ? &fwd : nullptr) : (have_bwd ? &bwd : nullptr);
    if (!seg || !seg->covers(s)) return 1e300;
    return dom.distance(dom.wrap(seg->eval(s)), dom.wrap(y));
  };

  const int M = std::max(64, static_cast<int>(s_max / 0.05));
  double best_s = 0, best_d = dist_at(0);
  for (int i = -M; i <= M; ++i) {
    double s = s_max * i / double(M);
    double d = dist_at(s);
    if (d < best_d) {
      best_d = d;
      best_s = s;
    }
  }
  // Golden-section refinement inside the best coarse bracket.
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = best_s - s_max / M, b = best_s + s_max / M;
  double c1 = b - phi * (b - a), c2 = a + phi * (b - a);
  double f1 = dist_at(c1), f2 = dist_at(c2);
  for (int it = 0; it < 80 && (b - a) > 1e-13 * (1 + std::abs(best_s)); ++it) {
    if (f1 < f2) {
      b = c2;
      c2 = c1;
      f2 = f1;
      c1 = b - phi * (b - a);
      f1 = dist_at(c1);
    } else {
      a = c1;
      c1 = c2;
      f1 = f2;
      c2 = a + phi * (b - a);
      f2 = dist_at(c2);
    }
  }
  double s_ref = 0.5 * (a + b);
  double d_ref = dist_at(s_ref);
  if (d_ref < best_d) {
    best_d = d_ref;
    best_s = s_ref;
  }
  res.s = best_s;
  res.distance = best_d;
  res.same_orbit = best_d <= threshold;
  return res;
}

namespace {

struct PairOrbits {
  OrbitSegment xf, xb, yf, yb;
  bool ok = true;
  std::string error;
};

PairOrbits integrate_pair(const VectorFieldSpec& X, const Vec& x, const Vec& y, double T,
                          double tol) {
  PairOrbits po;
  IntegrateOptions opts;
  opts.tol = tol;
  try {
    po.xf = flow_orbit(X, x, 0, T, opts);
    po.xb = flow_orbit(X, x, 0, -T, opts);
    po.yf = flow_orbit(X, y, 0, T, opts);
    po.yb = flow_orbit(X, y, 0, -T, opts);
  } catch (const Error& e) {
    po.ok = false;
    po.error = e.what();
  }
  return po;
}

double max_pair_distance(const VectorFieldSpec& X, const PairOrbits& po, double T,
                         double dt) {
  const DomainChart& dom = X.domain();
  double dmax = 0;
  for (double t = -T; t <= T + 1e-12; t += dt) {
    double tc = std::clamp(t, -T, T);
    const OrbitSegment& sx = tc >= 0 ? po.xf : po.xb;
    const OrbitSegment& sy = tc >= 0 ? po.yf : po.yb;
    dmax = std::max(dmax, dom.distance(dom.wrap(sx.eval(tc)), dom.wrap(sy.eval(tc))));
  }
  return dmax;
}

// Trapping-ball shortcut: both endpoints inside a ball of radius eps/2 around
// the same sink (forward) and source (backward) certify closeness beyond the
// horizon.
bool trapped_at(const VectorFieldSpec& X, const Vec& a, const Vec& b, double eps,
                const char* kind) {
  const DomainChart& dom = X.domain();
  for (const auto& s : X.singularities()) {
    if (s.kind != kind) continue;
    if (dom.distance(a, s.location) < eps / 2 && dom.distance(b, s.location) < eps / 2)
      return true;
  }
  return false;
}

}  // namespace

SeparatingReport separating_probe(const VectorFieldSpec& X, double eps, double T,
                                  int num_pairs, Rng& rng, PairSampler sampler,
                                  double offset_scale, double tol,
                                  const std::function<bool(const Vec&)>& region) {
  SeparatingReport rep;
  rep.eps = eps;
  rep.T = T;
  rep.seed = rng.seed();
  rep.sampler = sampler == PairSampler::IndependentUniform ? "independent" : "offset";
  const DomainChart& dom = X.domain();

  auto draw_point = [&]() -> Vec {
    for (int tries = 0; tries < 1000; ++tries) {
      Vec u(dom.dim());
      for (int i = 0; i < dom.dim(); ++i) u[i] = rng.uniform();
      Vec p(dom.dim());
      switch (dom.kind()) {
        case ChartKind::Torus:
          for (int i = 0; i < dom.dim(); ++i) p[i] = u[i] * dom.periods()[i];
          break;
        case ChartKind::Box:
          for (int i = 0; i < dom.dim(); ++i)
            p[i] = dom.lower()[i] + u[i] * (dom.upper()[i] - dom.lower()[i]);
          break;
        case ChartKind::Annulus: {
          double r = dom.annulus_inner() +
                     u[0] * (dom.annulus_outer() - dom.annulus_inner());
          double th = 2 * M_PI * u[1];
          p.resize(2);
          p << r * std::cos(th), r * std::sin(th);
          break;
        }
      }
      if (X.is_singular(p)) continue;
      if (region && !region(p)) continue;
      return p;
    }
    fail(Errc::BadConfig, "pair sampler could not find admissible points");
  };

  for (int i = 0; i < num_pairs; ++i) {
    SeparationWitness w;
    w.eps = eps;
    w.T = T;
    w.x = draw_point();
    if (sampler == PairSampler::IndependentUniform) {
      w.y = draw_point();
    } else {
      w.y = dom.wrap(w.x + rng.ball(dom.dim(), offset_scale));
      if (X.is_singular(w.y) || (region && !region(w.y))) {
        --i;
        continue;
      }
    }

    PairOrbits po = integrate_pair(X, w.x, w.y, T, tol);
    if (!po.ok) {
      w.error = po.error;
      rep.results.push_back(std::move(w));
      continue;
    }
    w.max_distance = max_pair_distance(X, po, T, 0.05);
    if (w.max_distance < eps) {
      SameOrbitResult so = same_orbit_search(X, w.x, w.y, 2 * T);
      w.same_orbit = so.same_orbit;
      w.reparam_s = so.s;
      if (!w.same_orbit) {
        w.non_separating = true;
        ++rep.witnesses;
        w.trapped_certified =
            trapped_at(X, dom.wrap(po.xf.eval(T)), dom.wrap(po.yf.eval(T)), eps,
                       "sink") &&
            trapped_at(X, dom.wrap(po.xb.eval(-T)), dom.wrap(po.yb.eval(-T)), eps,
                       "source");
      }
    }
    rep.results.push_back(std::move(w));
  }
  return rep;
}

KinematicReport kinematic_probe(const VectorFieldSpec& X, double eps,
                                const std::vector<double>& delta_grid, double T,
                                const std::vector<std::pair<Vec, Vec>>& pairs, double tol,
                                std::uint64_t seed) {
  KinematicReport rep;
  rep.eps = eps;
  rep.T = T;
  rep.delta_grid = delta_grid;
  rep.seed = seed;
  for (const auto& [x, y] : pairs) {
    PairOrbits po = integrate_pair(X, x, y, T, tol);
    KinematicCase kc;
    kc.x = x;
    kc.y = y;
    if (!po.ok) {
      kc.reason = po.error;
      rep.cases.push_back(std::move(kc));
      continue;
    }
    kc.max_distance = max_pair_distance(X, po, T, 0.05);
    for (double delta : delta_grid) {
      if (kc.max_distance > delta) continue;
      kc.delta = delta;
      kc.stayed_close = true;
      SameOrbitResult so = same_orbit_search(X, x, y, 2 * T);
      kc.same_orbit = so.same_orbit;
      kc.reparam_s = so.s;
      if (!so.same_orbit) {
        kc.failure = true;
        kc.reason = "distinct orbits stay delta-close up to the horizon";
      } else if (std::abs(so.s) >= eps) {
        kc.failure = true;
        kc.reason = "same orbit but reparametrization |s| >= eps";
      }
      break;  // report at the tightest delta reached
    }
    if (kc.failure) ++rep.failures;
    rep.cases.push_back(std::move(kc));
  }
  return rep;
}

GradientDecayReport gradient_decay_probe(const ScalarFieldSpec& f, const VectorFieldSpec& X,
                                         const Vec& sigma, const std::vector<double>& radii,
                                         int sphere_samples, double invariance_tol) {
  std::vector<double> t_grid = {0.25, 0.5, 1.0, 1.5, 2.0};
  const int d = X.domain().dim();
  if (d != 2)
    fail(Errc::BadConfig, "gradient decay probe implemented for planar charts");
  // f must be X-invariant, checked along short orbits off the saddle.
  double rcheck = radii.front();
  for (int k = 0; k < 4; ++k) {
    double th = 2 * M_PI * (k + 0.3) / 4.0;
    Vec p(2);
    p << sigma[0] + rcheck * std::cos(th), sigma[1] + rcheck * std::sin(th);
    double res = invariance_residual(f, X, p, t_grid);
    if (res > invariance_tol)
      fail(Errc::InvarianceViolated,
           "X.f != 0: residual " + std::to_string(res) + " at a probe point");
  }

  GradientDecayReport rep;
  rep.sigma = sigma;
  rep.radii = radii;
  for (double r : radii) {
    double sup = 0;
    for (int k = 0; k < sphere_samples; ++k) {
      double th = 2 * M_PI * k / double(sphere_samples);
      Vec p(2);
      p << sigma[0] + r * std::cos(th), sigma[1] + r * std::sin(th);
      sup = std::max(sup, f.gradient(p).norm());
    }
    rep.sup_grad.push_back(sup);
  }
  rep.monotone = true;
  for (std::size_t i = 1; i < rep.sup_grad.size(); ++i)
    if (rep.sup_grad[i] > rep.sup_grad[i - 1] * (1 + 1e-9)) rep.monotone = false;
  return rep;
}

// ---- Denjoy-Koksma ------------------------------------------------------------

std::vector<long long> continued_fraction_denominators(double theta, int K) {
  double x = theta - std::floor(theta);
  if (x < 1e-12 || 1.0 - x < 1e-12)
    fail(Errc::RationalRotation, "rotation number is an integer");
  std::vector<long long> q;
  long long q_prev = 1, q_prev2 = 0;
  for (int k = 0; k < K; ++k) {
    double inv = 1.0 / x;
    double af = std::floor(inv);
    if (af >= 1e12)
      fail(Errc::RationalRotation, "continued fraction terminated: rational input");
    long long a = static_cast<long long>(af);
    x = inv - af;
    long long qk = a * q_prev + q_prev2;
    q.push_back(qk);
    q_prev2 = q_prev;
    q_prev = qk;
    if (x < 1e-12 && static_cast<int>(q.size()) < K)
      fail(Errc::RationalRotation, "continued fraction terminated: rational input");
  }
  return q;
}

BirkhoffDeviationReport birkhoff_deviation(const std::function<double(double)>& tau,
                                           double theta, int K, int grid_points) {
  BirkhoffDeviationReport rep;
  rep.theta = theta;
  rep.grid_points = grid_points;
  rep.denominators = continued_fraction_denominators(theta, K);

  // Equidistributed average of tau: uniform-grid mean (unique ergodicity of
  // the irrational rotation equates the space and time averages).
  const int m = 1 << 16;
  double T = 0;
  for (int j = 0; j < m; ++j) T += tau(j / double(m));
  T /= m;
  rep.T = T;

  for (long long qn : rep.denominators) {
    double sup = 0;
    for (int g = 0; g < grid_points; ++g) {
      double x = g / double(grid_points);
      double sum = 0;
      double y = x;
      for (long long l = 0; l < qn; ++l) {
        sum += tau(y);
        y += theta;
        if (y >= 1.0) y -= std::floor(y);
      }
      sup = std::max(sup, std::abs(sum - T * double(qn)));
    }
    rep.deviation.push_back(sup);
  }
  return rep;
}

}  // namespace centra
