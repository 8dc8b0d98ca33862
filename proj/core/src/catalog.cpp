#include "centra/catalog.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

#include "centra/centralizer.hpp"

namespace centra {

namespace {

constexpr double kGolden = 0.61803398874989484820;  // (sqrt(5)-1)/2

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}
Vec v3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

std::string classify_by_jacobian(const Mat& J) {
  Eigen::EigenSolver<Mat> es(J);
  int pos = 0, neg = 0;
  for (int i = 0; i < J.rows(); ++i) {
    double re = es.eigenvalues()[i].real();
    if (re > 1e-9) ++pos;
    if (re < -1e-9) ++neg;
  }
  if (pos + neg < J.rows()) return "none";
  if (neg == J.rows()) return "sink";
  if (pos == J.rows()) return "source";
  return "saddle";
}

// ---- annulus rotations ------------------------------------------------------

CatalogEntry make_rigid_rotation() {
  CatalogEntry e;
  e.name = "rigid_rotation";
  DomainChart dom = DomainChart::annulus(1.0, 2.0, 0.5);
  auto eval = [](const Vec& p) { return v2(-p[1], p[0]); };
  auto jac = [](const Vec&) {
    Mat J(2, 2);
    J << 0, -1, 1, 0;
    return J;
  };
  e.X = VectorFieldSpec(dom, eval, jac, {}, "rigid_rotation");
  // Companion Y = f(r) X with f(r) = r; f is constant on orbits.
  auto yeval = [](const Vec& p) -> Vec { return p.norm() * v2(-p[1], p[0]); };
  auto yjac = [](const Vec& p) {
    double r = p.norm();
    double x = p[0], y = p[1];
    Mat J(2, 2);
    J << -y * x / r, -y * y / r - r, x * x / r + r, x * y / r;
    return J;
  };
  e.Y = VectorFieldSpec(dom, yeval, yjac, {}, "rigid_rotation_companion");
  ScalarFieldSpec f;
  f.eval = [](const Vec& p) { return p.norm(); };
  f.grad = [](const Vec& p) { return Vec(p / p.norm()); };
  f.name = "radius";
  e.f = f;
  e.provenance =
      "unit angular speed rotation field on the annulus 1 <= r <= 2; every orbit is "
      "periodic with the same period, so distinct orbits never separate";
  e.tags = {{"separating", false}, {"commuting", true}, {"collinear", true}};
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) {
      double r = 1.05 + 0.9 * i / 9.0;
      double th = 2 * M_PI * j / 10.0;
      e.grid.push_back(v2(r * std::cos(th), r * std::sin(th)));
    }
  e.calibration_points = {v2(1.2, 0), v2(0, 1.5), v2(-1.8, 0)};
  return e;
}

CatalogEntry make_annulus_unit_speed() {
  CatalogEntry e;
  e.name = "annulus_unit_speed";
  DomainChart dom = DomainChart::annulus(1.0, 2.0, 0.5);
  auto eval = [](const Vec& p) {
    double r = p.norm();
    return v2(-p[1] / r, p[0] / r);
  };
  auto jac = [](const Vec& p) {
    double r = p.norm(), r3 = r * r * r;
    double x = p[0], y = p[1];
    Mat J(2, 2);
    J << x * y / r3, -1 / r + y * y / r3, 1 / r - x * x / r3, -x * y / r3;
    return J;
  };
  e.X = VectorFieldSpec(dom, eval, jac, {}, "annulus_unit_speed");
  // Y = r X, the angular field (-y, x); commutes since r is orbit constant.
  auto yeval = [](const Vec& p) { return v2(-p[1], p[0]); };
  auto yjac = [](const Vec&) {
    Mat J(2, 2);
    J << 0, -1, 1, 0;
    return J;
  };
  e.Y = VectorFieldSpec(dom, yeval, yjac, {}, "annulus_unit_speed_companion");
  ScalarFieldSpec f;
  f.eval = [](const Vec& p) { return p.norm(); };
  f.grad = [](const Vec& p) { return Vec(p / p.norm()); };
  f.name = "radius";
  e.f = f;
  e.provenance =
      "unit-speed rotation on the annulus: angular speed 1/r, period 2*pi*r differs "
      "per orbit, which makes the flow separating at finite horizon";
  e.tags = {{"separating", true}, {"commuting", true}, {"collinear", true}};
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) {
      double r = 1.05 + 0.9 * i / 9.0;
      double th = 2 * M_PI * j / 10.0;
      e.grid.push_back(v2(r * std::cos(th), r * std::sin(th)));
    }
  e.calibration_points = {v2(1.2, 0), v2(0, 1.5), v2(-1.8, 0)};
  return e;
}

// ---- torus flows ---------------------------------------------------------------

CatalogEntry make_torus_linear(double theta) {
  CatalogEntry e;
  e.name = "torus_linear";
  // R below half the wrapped section-strand spacing so that section
  // disks never alias across the torus.
  DomainChart dom = DomainChart::torus(v2(1, 1), 0.18);
  Vec dir = v2(1.0, theta);
  auto eval = [dir](const Vec&) { return dir; };
  auto jac = [](const Vec&) { return Mat(Mat::Zero(2, 2)); };
  e.X = VectorFieldSpec(dom, eval, jac, {}, "torus_linear");
  if (std::abs(theta - 0.5) < 1e-12) {
    // Invariant function for the rational inclination 1/2.
    ScalarFieldSpec f;
    f.eval = [](const Vec& p) { return std::cos(2 * M_PI * (p[0] - 2 * p[1])); };
    f.grad = [](const Vec& p) {
      double s = -2 * M_PI * std::sin(2 * M_PI * (p[0] - 2 * p[1]));
      return v2(s, -2 * s);
    };
    f.name = "cos(2pi(x-2y))";
    e.f = f;
  }
  std::ostringstream os;
  os << "constant field (1, " << theta << ") on the flat 2-torus";
  e.provenance = os.str();
  e.tags = {{"separating", false}, {"commuting", false}, {"collinear", true}};
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) e.grid.push_back(v2((i + 0.5) / 10.0, (j + 0.5) / 10.0));
  e.calibration_points = {v2(0.2, 0.3), v2(0.7, 0.1)};
  return e;
}

CatalogEntry make_shear_strip() {
  CatalogEntry e;
  e.name = "shear_strip";
  DomainChart dom = DomainChart::box(v2(-4, -16), v2(20, 16), 5.0);
  auto eval = [](const Vec& p) { return v2(1.0, p[1]); };
  auto jac = [](const Vec&) {
    Mat J(2, 2);
    J << 0, 0, 0, 1;
    return J;
  };
  e.X = VectorFieldSpec(dom, eval, jac, {}, "shear_strip");
  ScalarFieldSpec f;
  f.eval = [](const Vec& p) { return p[1] * std::exp(-p[0]); };
  f.grad = [](const Vec& p) {
    return v2(-p[1] * std::exp(-p[0]), std::exp(-p[0]));
  };
  f.name = "y*exp(-x)";
  e.f = f;
  e.provenance =
      "shear field (1, y) on a box; the linear Poincare flow expands normals at unit "
      "exponential rate along y = 0 and the distortion between stacked orbits grows";
  e.tags = {{"separating", false}, {"commuting", false}, {"collinear", false}};
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j)
      e.grid.push_back(v2(-3.0 + 21.0 * i / 9.0, -2.2 + 4.4 * j / 9.0));
  e.calibration_points = {v2(0, 0), v2(0, 0.5), v2(0, -0.5), v2(0, 1.5), v2(2, 1.0)};
  return e;
}

CatalogEntry make_linear_saddle() {
  CatalogEntry e;
  e.name = "linear_saddle";
  DomainChart dom = DomainChart::box(v2(-2, -2), v2(2, 2), 1.0);
  auto eval = [](const Vec& p) { return v2(p[0], -p[1]); };
  auto jac = [](const Vec&) {
    Mat J(2, 2);
    J << 1, 0, 0, -1;
    return J;
  };
  std::vector<VectorFieldSpec::Singularity> zeros = {{v2(0, 0), "saddle"}};
  e.X = VectorFieldSpec(dom, eval, jac, zeros, "linear_saddle");
  ScalarFieldSpec f;
  f.eval = [](const Vec& p) { return p[0] * p[1]; };
  f.grad = [](const Vec& p) { return v2(p[1], p[0]); };
  f.name = "xy";
  e.f = f;
  e.provenance = "linear saddle diag(1,-1) on a box; xy is a first integral";
  e.tags = {{"separating", false}, {"commuting", false}, {"collinear", false}};
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j)
      e.grid.push_back(v2(-0.7 + 1.4 * i / 9.0, -0.7 + 1.4 * j / 9.0));
  e.calibration_points = {v2(0.05, 0.5), v2(0.05, -0.5), v2(0.03, 0.8)};
  return e;
}

CatalogEntry make_morse_gradient_torus() {
  CatalogEntry e;
  e.name = "morse_gradient_torus";
  DomainChart dom = DomainChart::torus(v2(1, 1), 0.2);
  // Gradient of (cos 2pi x + cos 2pi y)/(8 pi^2). The normalization puts the
  // linearization rates at +-1/2 so that multi-step diagnostics (hitting
  // series up to n = 30, probes with T = 50) stay above the singular floor.
  auto eval = [](const Vec& p) {
    return v2(-std::sin(2 * M_PI * p[0]) / (4 * M_PI),
              -std::sin(2 * M_PI * p[1]) / (4 * M_PI));
  };
  auto jac = [](const Vec& p) {
    Mat J(2, 2);
    J << -0.5 * std::cos(2 * M_PI * p[0]), 0, 0, -0.5 * std::cos(2 * M_PI * p[1]);
    return J;
  };
  // Critical points at the half-integer lattice, classified from the field
  // Jacobian eigenvalues.
  std::vector<VectorFieldSpec::Singularity> zeros;
  for (double sx : {0.0, 0.5})
    for (double sy : {0.0, 0.5}) {
      Vec s = v2(sx, sy);
      zeros.push_back({s, classify_by_jacobian(jac(s))});
    }
  e.X = VectorFieldSpec(dom, eval, jac, zeros, "morse_gradient_torus");
  e.provenance =
      "gradient of (cos 2pi x + cos 2pi y)/(8 pi^2) on the torus: sink at (0,0), "
      "source at (1/2,1/2), saddles at (0,1/2) and (1/2,0); robustly not separating";
  e.tags = {{"separating", false}, {"commuting", false}, {"collinear", false}};
  e.wandering = [dom](const Vec& p) {
    for (double sx : {0.0, 0.5})
      for (double sy : {0.0, 0.5}) {
        Vec s(2);
        s << sx, sy;
        if (dom.displacement(s, p).norm() < 0.08) return false;
      }
    return true;
  };
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) {
      Vec p = v2(0.05 + 0.1 * i + 0.025, 0.05 + 0.1 * j + 0.017);
      p = dom.wrap(p);
      if (e.wandering(p)) e.grid.push_back(p);
    }
  return e;
}

// ---- the T^3 example -----------------------------------------------------------

// Ingredients f, g on the circle: prescribed formulas on |s - 1/2| < 1/4 and
// C^1 positive extensions on the complementary arc.
struct T3Ingredients {
  // f blend on [-1/4, 1/4]: c0 + c1 cos(2 pi s) + c2 cos(4 pi s)
  static constexpr double c1 = -16.0 / M_PI;
  static constexpr double c2 = 1.5;
  static constexpr double c0 = 4.0 + c2;
  // g blend on [3/4, 5/4], cubic Hermite in u = (s - 3/4) / 0.5 matching the
  // formula values and slopes at both seams.
  static constexpr double gv0 = 16.0 / 25.0;                       // g(3/4)
  static constexpr double gv1 = 16.0 / 9.0;                        // g(5/4 ~ 1/4)
  static constexpr double gd0 = -384.0 / 125.0;                    // g'(3/4) * 0.5
  static constexpr double gd1 = 128.0 / 27.0;                      // g'(1/4) * 0.5
  static constexpr double ga2 = 3.0 * (gv1 - gv0) - 2.0 * gd0 - gd1;
  static constexpr double ga3 = -2.0 * (gv1 - gv0) + gd0 + gd1;

  static double wrap(double s) { return s - std::floor(s); }
  static bool formula_zone(double s) {
    double d = wrap(s) - 0.5;
    return std::abs(d) < 0.25;
  }
  static double f(double s) {
    if (formula_zone(s)) {
      double sc = 0.5 + (wrap(s) - 0.5);
      return 1.0 / sq(1.0 - 2.0 * sc);
    }
    double sb = wrap(s + 0.5) - 0.5;  // representative in [-1/4, 1/4]
    return c0 + c1 * std::cos(2 * M_PI * sb) + c2 * std::cos(4 * M_PI * sb);
  }
  static double df(double s) {
    if (formula_zone(s)) {
      double sc = 0.5 + (wrap(s) - 0.5);
      return 4.0 / std::pow(1.0 - 2.0 * sc, 3);
    }
    double sb = wrap(s + 0.5) - 0.5;
    return -2 * M_PI * c1 * std::sin(2 * M_PI * sb) - 4 * M_PI * c2 * std::sin(4 * M_PI * sb);
  }
  static double g(double s) {
    if (formula_zone(s)) {
      double sc = 0.5 + (wrap(s) - 0.5);
      return 1.0 / sq(1.0 - 4.0 * sc * sc);
    }
    double sb = wrap(s + 0.5) - 0.5;      // in [-1/4, 1/4]
    double u = (sb + 0.25) / 0.5;         // chart [3/4, 5/4] -> [0,1]
    return gv0 + gd0 * u + ga2 * u * u + ga3 * u * u * u;
  }
  static double dg(double s) {
    if (formula_zone(s)) {
      double sc = 0.5 + (wrap(s) - 0.5);
      return 16.0 * sc / std::pow(1.0 - 4.0 * sc * sc, 3);
    }
    double sb = wrap(s + 0.5) - 0.5;
    double u = (sb + 0.25) / 0.5;
    return (gd0 + 2 * ga2 * u + 3 * ga3 * u * u) / 0.5;
  }
  // h = f/g extends smoothly across the fiber: (1+2s)^2 on the formula zone.
  static double h(double s) {
    if (formula_zone(s)) {
      double sc = 0.5 + (wrap(s) - 0.5);
      return sq(1.0 + 2.0 * sc);
    }
    return f(s) / g(s);
  }
  static double dh(double s) {
    if (formula_zone(s)) {
      double sc = 0.5 + (wrap(s) - 0.5);
      return 4.0 * (1.0 + 2.0 * sc);
    }
    double gs = g(s);
    return (df(s) * gs - f(s) * dg(s)) / (gs * gs);
  }
  static double psi(double x1, double x2) {
    return 0.5 * (sq(std::cos(M_PI * x1)) + sq(std::cos(M_PI * x2)));
  }
  static double dpsi1(double x1) { return -0.5 * M_PI * std::sin(2 * M_PI * x1); }
};

CatalogEntry make_t3(const CatalogOptions&) {
  CatalogEntry e;
  e.name = "t3_collinear_not_qt";
  DomainChart dom = DomainChart::torus(v3(1, 1, 1), 0.15);
  const double gamma = kGolden;
  using T3 = T3Ingredients;

  auto eval = [gamma](const Vec& p) {
    double c = T3::psi(p[1], p[2]) / T3::g(p[0]);
    return v3(0.0, c, gamma * c);
  };
  auto jac = [gamma](const Vec& p) {
    double gs = T3::g(p[0]);
    double psi = T3::psi(p[1], p[2]);
    double ds = -psi * T3::dg(p[0]) / (gs * gs);
    double d1 = T3::dpsi1(p[1]) / gs;
    double d2 = T3::dpsi1(p[2]) / gs;
    Mat J = Mat::Zero(3, 3);
    J(1, 0) = ds;
    J(2, 0) = gamma * ds;
    J(1, 1) = d1;
    J(2, 1) = gamma * d1;
    J(1, 2) = d2;
    J(2, 2) = gamma * d2;
    return J;
  };
  std::vector<VectorFieldSpec::Singularity> zeros = {{v3(0.5, 0.5, 0.5), "none"},
                                                     {v3(0.0, 0.5, 0.5), "none"}};
  e.X = VectorFieldSpec(dom, eval, jac, zeros, "t3_collinear_not_qt");

  // Companion Y = h X with h = f/g = (1+2s)^2 near the fiber; h is constant
  // along the fibers, so [X, Y] = (X.h) X = 0 exactly.
  auto yeval = [gamma](const Vec& p) {
    double c = T3::h(p[0]) * T3::psi(p[1], p[2]) / T3::g(p[0]);
    return v3(0.0, c, gamma * c);
  };
  auto yjac = [eval, jac](const Vec& p) {
    Mat J = T3::h(p[0]) * jac(p);
    Vec Xp = eval(p);
    double hp = T3::dh(p[0]);
    J(1, 0) += hp * Xp[1];
    J(2, 0) += hp * Xp[2];
    return J;
  };
  e.Y = VectorFieldSpec(dom, yeval, yjac, zeros, "t3_companion");

  e.provenance =
      "fibered field on T^3 = S^1 x T^2: X = (1/g) (0, psi V) with psi vanishing only "
      "at (1/2,1/2), V of golden inclination, f = 1/(1-2s)^2 and g = 1/(1-4s^2)^2 near "
      "s = 1/2 with C^1 cosine/cubic extensions elsewhere (blend seam at |s-1/2| = 1/4, "
      "recorded here). The registered companion is Y = (f/g) X, whose ratio (1+2s)^2 "
      "extends smoothly across the singular fiber; the unbounded companion f X from the "
      "source construction is exercised through the f ingredient directly.";
  e.tags = {{"separating", false}, {"commuting", true}, {"collinear", true},
            {"singular_fibers", true}};

  double svals[10] = {0.02, 0.10, 0.18, 0.26, 0.34, 0.66, 0.74, 0.82, 0.90, 0.98};
  double xvals[10][2] = {{0.1, 0.2}, {0.2, 0.8}, {0.3, 0.1}, {0.7, 0.3}, {0.8, 0.7},
                         {0.9, 0.2}, {0.15, 0.65}, {0.65, 0.15}, {0.85, 0.85}, {0.35, 0.9}};
  for (double s : svals)
    for (auto& x : xvals) e.grid.push_back(v3(s, x[0], x[1]));
  return e;
}

CatalogEntry make_suspension(const CatalogOptions& o) {
  CatalogEntry e;
  e.name = "suspension_rotation";
  DomainChart dom = DomainChart::torus(v2(1, 1), 0.18);
  const double th = o.suspension_theta;
  const double A = o.roof_amplitude;
  auto roof = [A](double x) { return 1.0 + A * std::cos(2 * M_PI * x); };
  auto droof = [A](double x) { return -2 * M_PI * A * std::sin(2 * M_PI * x); };
  // X = (theta, 1) / tau(x - theta y): the return map over {y = 0} is the
  // rotation by theta with return time tau (tau is constant on each segment).
  auto eval = [th, roof](const Vec& p) {
    double phi = p[0] - th * p[1];
    double c = 1.0 / roof(phi);
    return v2(th * c, c);
  };
  auto jac = [th, roof, droof](const Vec& p) {
    double phi = p[0] - th * p[1];
    double t = roof(phi), dt = droof(phi);
    double cx = -dt / (t * t), cy = th * dt / (t * t);
    Mat J(2, 2);
    J << th * cx, th * cy, cx, cy;
    return J;
  };
  e.X = VectorFieldSpec(dom, eval, jac, {}, "suspension_rotation");
  std::ostringstream os;
  os << "suspension of the circle rotation by theta=" << th << " under the roof 1 + "
     << A << " cos(2 pi x), realized as a time-changed linear torus flow";
  e.provenance = os.str();
  e.tags = {{"separating", false}, {"commuting", false}, {"collinear", true}};
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) e.grid.push_back(v2((i + 0.5) / 10.0, (j + 0.5) / 10.0));
  e.calibration_points = {v2(0.2, 0.3), v2(0.7, 0.1)};
  return e;
}

}  // namespace

std::vector<std::string> catalog_names() {
  return {"annulus_unit_speed", "rigid_rotation",    "torus_linear",
          "shear_strip",        "linear_saddle",     "morse_gradient_torus",
          "t3_collinear_not_qt", "suspension_rotation"};
}

CatalogEntry catalog_get(const std::string& name, const CatalogOptions& opts) {
  if (name == "rigid_rotation") return make_rigid_rotation();
  if (name == "annulus_unit_speed") return make_annulus_unit_speed();
  if (name == "torus_linear") return make_torus_linear(opts.theta);
  if (name == "shear_strip") return make_shear_strip();
  if (name == "linear_saddle") return make_linear_saddle();
  if (name == "morse_gradient_torus") return make_morse_gradient_torus();
  if (name == "t3_collinear_not_qt") return make_t3(opts);
  if (name == "suspension_rotation") return make_suspension(opts);
  fail(Errc::UnknownEntry, "no catalog entry named '" + name + "'");
}

std::vector<std::string> catalog_verify(const std::string& name,
                                        const CatalogOptions& opts) {
  std::vector<std::string> failures;
  CatalogEntry e = catalog_get(name, opts);
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) failures.push_back(name + ": " + what);
  };

  if (e.Y) {
    std::vector<double> tg = {-1.0, -0.5, 0.5, 1.0};
    CommutationReport rep = commutation_residual(e.X, *e.Y, e.grid, tg, 1e-6);
    expect(rep.verdict, "declared commuting pair exceeds 1e-6 residual");
  }
  if (e.f) {
    std::vector<double> tg = {0.5, 1.0, 2.0};
    int checked = 0;
    for (std::size_t i = 0; i < e.grid.size() && checked < 5; i += 17) {
      try {
        double r = invariance_residual(*e.f, e.X, e.grid[i % e.grid.size()], tg);
        expect(r <= 1e-6, "declared invariant f has residual " + std::to_string(r));
        ++checked;
      } catch (const Error& err) {
        if (err.code() != Errc::DomainExit) throw;  // edge samples may flow out
      }
    }
    expect(checked > 0, "no in-domain sample for the invariance check");
  }
  for (const auto& s : e.X.singularities()) {
    expect(e.X(s.location).norm() <= e.X.zero_tolerance(),
           "listed singularity is not a zero of X");
    if (s.kind != "none")
      expect(classify_by_jacobian(e.X.jacobian(s.location)) == s.kind,
             "singularity classification mismatch at listed zero");
  }

  if (name == "morse_gradient_torus") {
    Rng rng(7);
    SeparatingReport rep =
        separating_probe(e.X, 0.1, 30.0, 40, rng, PairSampler::Offset, 0.03, 1e-8,
                         e.wandering);
    expect(rep.witnesses >= 1, "expected a non-separating witness");
  }
  if (name == "annulus_unit_speed") {
    Rng rng(7);
    SeparatingReport rep =
        separating_probe(e.X, 0.05, 100.0, 40, rng, PairSampler::IndependentUniform);
    expect(rep.witnesses == 0, "unexpected non-separating witness");
  }
  if (name == "t3_collinear_not_qt") {
    using T3 = T3Ingredients;
    expect(std::abs(T3::f(0.499) - 250000.0) < 1.0, "f(0.499) != 1/(0.002)^2");
    expect(T3::f(0.499) > 1e5, "f does not blow up near the fiber");
    double h0 = T3::h(0.5);
    expect(std::abs(T3::h(0.5 - 1e-3) - h0) < 1e-2 &&
               std::abs(T3::h(0.5 + 1e-3) - h0) < 1e-2,
           "f/g fails the continuity check across s = 1/2");
    expect(std::abs(T3::h(0.25) - 2.25) < 1e-12, "f/g at the seam is not (1+2s)^2");
    // C^1 seam continuity of the blended ingredients.
    for (double s : {0.25, 0.75}) {
      expect(std::abs(T3::f(s - 1e-7) - T3::f(s + 1e-7)) < 1e-4, "f seam value jump");
      expect(std::abs(T3::g(s - 1e-7) - T3::g(s + 1e-7)) < 1e-4, "g seam value jump");
      expect(std::abs(T3::df(s - 1e-7) - T3::df(s + 1e-7)) < 1e-2, "f' seam jump");
      expect(std::abs(T3::dg(s - 1e-7) - T3::dg(s + 1e-7)) < 1e-2, "g' seam jump");
    }
    for (double s = 0.0; s < 1.0; s += 0.01) {
      expect(T3::f(s) > 0, "f must stay positive");
      expect(T3::g(s) > 0, "g must stay positive");
    }
  }
  if (name == "suspension_rotation") {
    // Return time over {y=0} equals the roof function.
    const double th = opts.suspension_theta;
    Vec p = v2(0.3, 0.0);
    OrbitSegment seg = flow_orbit(e.X, p, 0, 2.5, {});
    double target = 1.0 + opts.roof_amplitude * std::cos(2 * M_PI * 0.3);
    Vec hit = seg.eval(target);
    expect(std::abs(hit[1] - 1.0) < 1e-8, "roof return time mismatch");
    expect(std::abs(hit[0] - (0.3 + th)) < 1e-8, "return map is not the rotation");
  }
  return failures;
}

}  // namespace centra
