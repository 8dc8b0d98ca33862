#include <doctest.h>

#include <centra/catalog.hpp>
#include <centra/integrate.hpp>

#include <cmath>

#include "oracles.hpp"

using namespace centra;

namespace {
Vec pt(double x, double y) {
  Vec p(2);
  p << x, y;
  return p;
}
}  // namespace

TEST_CASE("flow: rigid rotation quarter turn") {
  CatalogEntry e = catalog_get("rigid_rotation");
  Vec q = flow(e.X, pt(1, 0), M_PI / 2, 1e-11);
  CHECK((q - pt(0, 1)).norm() < 1e-9);
  // flow(X, p, 0) = p exactly
  Vec p0 = pt(1.3, 0.4);
  CHECK((flow(e.X, p0, 0.0) - p0).norm() == 0.0);
}

TEST_CASE("flow: constant torus field is affine") {
  CatalogEntry e = catalog_get("torus_linear");  // (1, 0.5)
  Vec q = e.X.domain().wrap(flow(e.X, pt(0.2, 0.3), 0.5, 1e-12));
  CHECK(q[0] == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(q[1] == doctest::Approx(0.55).epsilon(1e-12));
}

TEST_CASE("flow: unit-speed annulus half turn at r = 2") {
  // theta(t) = theta0 + t/r, closed form against the fixed-step oracle.
  CatalogEntry e = catalog_get("annulus_unit_speed");
  Vec p = pt(2, 0);
  Vec q = flow(e.X, p, 2 * M_PI, 1e-11);
  CHECK((q - pt(2 * std::cos(M_PI), 2 * std::sin(M_PI))).norm() < 1e-8);
  Vec qo = oracle::rk4_field(e.X, p, 2 * M_PI, 20000);
  CHECK((q - qo).norm() < 1e-7);
}

TEST_CASE("flow: box exit raises DomainExit") {
  CatalogEntry e = catalog_get("shear_strip");
  CHECK_THROWS_AS(flow(e.X, pt(0, 2.0), 3.0), Error);  // y = 2 e^3 > 16
  try {
    flow(e.X, pt(0, 2.0), 3.0);
  } catch (const Error& err) {
    CHECK(err.code() == Errc::DomainExit);
  }
}

TEST_CASE("variational: rotation matrix closed form") {
  CatalogEntry e = catalog_get("rigid_rotation");
  double t = 0.8;
  Mat W = variational(e.X, pt(1.2, 0.5), t, 1e-11);
  Mat R(2, 2);
  R << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  CHECK((W - R).norm() < 1e-9);
  // matrix exponential oracle
  Mat A(2, 2);
  A << 0, -1, 1, 0;
  CHECK((W - oracle::expm(t * A)).norm() < 1e-9);
}

TEST_CASE("variational: constant field gives identity") {
  CatalogEntry e = catalog_get("torus_linear");
  Mat W = variational(e.X, pt(0.1, 0.9), 7.3, 1e-11);
  CHECK((W - Mat::Identity(2, 2)).norm() < 1e-9);
}

TEST_CASE("variational: linear saddle is diag(e, 1/e)") {
  CatalogEntry e = catalog_get("linear_saddle");
  Mat W = variational(e.X, pt(0.2, 0.2), 1.0, 1e-12);
  Mat A(2, 2);
  A << 1, 0, 0, -1;
  Mat E = oracle::expm(A);
  CHECK((W - E).norm() < 1e-9);
  CHECK(W(0, 0) == doctest::Approx(std::exp(1.0)).epsilon(1e-10));
  CHECK(W(1, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-10));
}

TEST_CASE("lie_bracket: antisymmetry, multiples, and a symbolic case") {
  CatalogEntry e = catalog_get("annulus_unit_speed");
  Vec p = pt(1.5, 0.3);
  CHECK(lie_bracket(e.X, e.X, p).norm() <= 1e-10);

  auto Y3 = VectorFieldSpec(e.X.domain(), [&X = e.X](const Vec& q) { return Vec(3.0 * X(q)); },
                            nullptr, {}, "3X");
  CHECK(lie_bracket(e.X, Y3, p).norm() < 1e-8);

  // X = (1,0), Y = (0, x1) on a box: [X, Y] = (0, 1).
  DomainChart box = DomainChart::box(pt(-2, -2), pt(2, 2), 1.0);
  VectorFieldSpec Xc(box, [](const Vec&) { return pt(1, 0); });
  VectorFieldSpec Yx(box, [](const Vec& q) { return pt(0, q[0]); });
  Vec br = lie_bracket(Xc, Yx, pt(0.3, -0.4));
  CHECK((br - pt(0, 1)).norm() < 1e-9);
}

TEST_CASE("flow group law on sampled points") {
  // Error in the two-leg comparison is amplified by the tangent flow, so the
  // bound carries max(1, |DX_{s+t}|).
  for (const char* name : {"rigid_rotation", "torus_linear", "annulus_unit_speed",
                           "shear_strip"}) {
    CatalogEntry e = catalog_get(name);
    Rng rng(42);
    double tol = 1e-10;
    double span = std::string(name) == "shear_strip" ? 1.5 : 5.0;
    for (int i = 0; i < 4; ++i) {
      Vec p = e.grid[(i * 7) % e.grid.size()];
      double s = rng.uniform(-span, span), t = rng.uniform(-span, span);
      try {
        Vec a = flow(e.X, e.X.domain().wrap(flow(e.X, p, s, tol)), t, tol);
        Vec b = flow(e.X, p, s + t, tol);
        double amp = std::max(1.0, variational(e.X, p, s + t, tol).norm());
        CHECK(e.X.domain().distance(e.X.domain().wrap(a), e.X.domain().wrap(b)) <
              10 * 1e-8 * amp);
      } catch (const Error&) {
        // domain exits are acceptable for box samples here
      }
    }
  }
}

TEST_CASE("variational cocycle identity") {
  CatalogEntry e = catalog_get("morse_gradient_torus");
  Vec p = pt(0.3, 0.15);
  double s = 0.7, t = 0.9;
  Mat Wst = variational(e.X, p, s + t, 1e-11);
  Vec ps = flow(e.X, p, t, 1e-11);
  Mat comp = variational(e.X, e.X.domain().wrap(ps), s, 1e-11) * variational(e.X, p, t, 1e-11);
  CHECK((Wst - comp).norm() < 1e-7);
}

TEST_CASE("finite-difference consistency of the variational matrix") {
  CatalogEntry e = catalog_get("rigid_rotation");
  Vec p = pt(1.4, 0.2);
  double t = 1.1, h = 1e-4;
  Mat W = variational(e.X, p, t, 1e-11);
  for (int j = 0; j < 2; ++j) {
    Vec dp = Vec::Zero(2);
    dp[j] = h;
    Vec col = (flow(e.X, p + dp, t, 1e-11) - flow(e.X, p - dp, t, 1e-11)) / (2 * h);
    CHECK((W.col(j) - col).norm() < 50 * (h * h + 1e-10));
  }
}

TEST_CASE("bracket Leibniz rule with polynomial f") {
  // [X, fY] = f [X,Y] + (X.f) Y for f(x,y) = x^2 + y.
  CatalogEntry e = catalog_get("linear_saddle");
  const VectorFieldSpec& X = e.X;
  DomainChart dom = X.domain();
  auto f = [](const Vec& q) { return q[0] * q[0] + q[1]; };
  auto df = [](const Vec& q) { return pt(2 * q[0], 1); };
  VectorFieldSpec Y(dom, [](const Vec& q) { return pt(q[1], q[0] * q[0]); });
  VectorFieldSpec fY(dom, [f, &Y](const Vec& q) { return Vec(f(q) * Y(q)); });

  Vec p = pt(0.4, -0.3);
  Vec lhs = lie_bracket(X, fY, p);
  Vec rhs = f(p) * lie_bracket(X, Y, p) + df(p).dot(X(p)) * Y(p);
  CHECK((lhs - rhs).norm() < 1e-6);
}

TEST_CASE("dense output matches endpoint states") {
  CatalogEntry e = catalog_get("annulus_unit_speed");
  Vec p = pt(1.5, 0);
  OrbitSegment seg = flow_orbit(e.X, p, 0, 5.0, {});
  CHECK((seg.eval(0.0) - p).norm() == 0.0);
  Vec probe = seg.eval(2.5);
  CHECK((probe - flow(e.X, p, 2.5, 1e-12)).norm() < 1e-8);
  // backward segment
  OrbitSegment back = flow_orbit(e.X, p, 0, -3.0, {});
  CHECK((back.eval(-1.5) - flow(e.X, p, -1.5, 1e-12)).norm() < 1e-8);
}
