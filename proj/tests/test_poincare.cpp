#include <doctest.h>

#include <centra/base_orbit.hpp>
#include <centra/catalog.hpp>
#include <centra/poincare.hpp>

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

TEST_CASE("normal frame: determinism and the axis-aligned cases") {
  DomainChart box = DomainChart::box(pt(-2, -2), pt(2, 2), 1.0);
  VectorFieldSpec Xc(box, [](const Vec&) { return pt(1, 0); });
  NormalFrame f = normal_frame(Xc, pt(0.3, 0.3));
  CHECK((f.u - pt(1, 0)).norm() < 1e-14);
  CHECK((f.E.col(0) - pt(0, 1)).norm() < 1e-14);

  CatalogEntry rot = catalog_get("rigid_rotation");
  NormalFrame fr = normal_frame(rot.X, pt(1, 0));
  CHECK((fr.u - pt(0, 1)).norm() < 1e-14);
  CHECK(std::abs(std::abs(fr.E.col(0)[0]) - 1.0) < 1e-14);
  NormalFrame fr2 = normal_frame(rot.X, pt(1, 0));
  CHECK((fr.E - fr2.E).norm() == 0.0);  // reproducible
}

TEST_CASE("normal frame: d=3 Gram-Schmidt against an independent construction") {
  Vec per(3);
  per << 1, 1, 1;
  DomainChart t3 = DomainChart::torus(per, 0.3);
  Vec dir(3);
  dir << 1, 1, 0;
  VectorFieldSpec X(t3, [dir](const Vec&) { return Vec(dir / std::sqrt(2.0)); });
  Vec p(3);
  p << 0.2, 0.4, 0.6;
  NormalFrame f = normal_frame(X, p);
  // orthonormal, orthogonal to u
  CHECK((f.E.transpose() * f.E - Mat::Identity(2, 2)).norm() < 1e-12);
  CHECK((f.E.transpose() * f.u).norm() < 1e-12);
  // independent Gram-Schmidt on the same seed basis (axes 1, 2 after dropping
  // the axis most parallel to u)
  Vec u = dir.normalized();
  Vec e1(3), e2(3);
  e1 << 0, 1, 0;
  e1 -= u * u[1];
  e1.normalize();
  e2 << 0, 0, 1;
  e2 -= u * u[2] + e1 * e1[2];
  e2.normalize();
  CHECK((f.E.col(0) - e1).norm() < 1e-12);
  CHECK((f.E.col(1) - e2).norm() < 1e-12);
}

TEST_CASE("linear Poincare flow: isometries and constants have logabsdet 0") {
  CatalogEntry rot = catalog_get("rigid_rotation");
  for (double t : {0.4, 1.7, -2.3}) {
    LinearPoincareOp op = linear_poincare(rot.X, pt(1.3, 0.2), t, 1e-11);
    CHECK(std::abs(op.logabsdet) < 1e-8);
  }
  CatalogEntry lin = catalog_get("torus_linear");
  LinearPoincareOp op = linear_poincare(lin.X, pt(0.2, 0.7), 3.0, 1e-11);
  CHECK((op.M - Mat::Identity(1, 1)).norm() < 1e-9);
  CHECK(std::abs(op.logabsdet) < 1e-10);
}

TEST_CASE("linear Poincare flow: shear strip oracle values") {
  CatalogEntry e = catalog_get("shear_strip");
  // Along y = 0 the normal expansion is exactly e^t.
  LinearPoincareOp op0 = linear_poincare(e.X, pt(0, 0), 1.0, 1e-12);
  CHECK(op0.logabsdet == doctest::Approx(1.0).epsilon(1e-8));

  // Off-axis value frozen from the dense variational + projection oracle.
  Vec p = pt(0, 0.5);
  LinearPoincareOp op = linear_poincare(e.X, p, 1.0, 1e-12);
  CHECK(op.logabsdet == doctest::Approx(0.588392504721).epsilon(1e-9));
  // Recompute the oracle here to keep the routes independent.
  Mat W = oracle::rk4_variational(e.X, p, 1.0, 20000);
  Vec q = oracle::rk4_field(e.X, p, 1.0, 20000);
  NormalFrame fp = normal_frame(e.X, p), fq = normal_frame(e.X, q);
  CHECK(logabsdet_qr(fq.E.transpose() * W * fp.E) ==
        doctest::Approx(op.logabsdet).epsilon(1e-9));
}

TEST_CASE("linear Poincare flow: composition and frame independence") {
  CatalogEntry e = catalog_get("shear_strip");
  Vec p = pt(0.5, 0.8);
  double s = 0.9, t = 1.3;
  LinearPoincareOp whole = linear_poincare(e.X, p, s + t, 1e-11);
  LinearPoincareOp first = linear_poincare(e.X, p, s, 1e-11);
  Vec ps = flow(e.X, p, s, 1e-11);
  LinearPoincareOp second = linear_poincare(e.X, ps, t, 1e-11);
  CHECK(whole.logabsdet ==
        doctest::Approx(first.logabsdet + second.logabsdet).epsilon(1e-7));

  // |logabsdet| is invariant under a different orthonormal frame choice.
  Mat W = variational(e.X, p, s, 1e-11);
  auto alt_frame = [](const VectorFieldSpec& X, const Vec& q) {
    Vec u = X(q).normalized();
    Mat E(2, 1);
    E << -u[1], u[0];  // rotate u by +90 degrees
    return E;
  };
  Mat E_p = alt_frame(e.X, p), E_q = alt_frame(e.X, ps);
  double alt = logabsdet_qr(E_q.transpose() * W * E_p);
  CHECK(std::abs(std::abs(alt) - std::abs(first.logabsdet)) < 1e-9);
}

TEST_CASE("poincare map: base orbit hits at time n") {
  for (const char* name : {"rigid_rotation", "shear_strip"}) {
    CatalogEntry e = catalog_get(name);
    Vec p = name == std::string("rigid_rotation") ? pt(1.4, 0) : pt(0, 0.4);
    PoincareMapNum pm = poincare_map(e.X, p, 2.0, 4.0, 0.01, 0.4);
    auto [img, tau] = pm.evaluate(p);
    CHECK(tau == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(e.X.domain().distance(img, e.X.domain().wrap(flow(e.X, p, 2.0, 1e-11))) < 1e-8);
  }
}

TEST_CASE("poincare map: rotation section at one radian") {
  // Rigid rotation: every orbit advances one radian per unit time, so the
  // section through X_1(p) is hit at tau = 1 with image r (cos 1, sin 1).
  CatalogEntry e = catalog_get("rigid_rotation");
  Vec p = pt(1.2, 0);
  PoincareMapNum pm = poincare_map(e.X, p, 1.0, 3.0, 0.3, 0.45);
  for (double r : {1.1, 1.3}) {
    auto [img, tau] = pm.evaluate(pt(r, 0));
    CHECK(tau == doctest::Approx(1.0).epsilon(1e-9));
    CHECK((img - pt(r * std::cos(1.0), r * std::sin(1.0))).norm() < 1e-8);
  }
}

TEST_CASE("poincare map: unit-speed annulus hitting times scale with r") {
  CatalogEntry e = catalog_get("annulus_unit_speed");
  Vec p = pt(1.0, 0);  // angular speed 1, target ray at angle 1
  PoincareMapNum pm = poincare_map(e.X, p, 1.0, 5.0, 0.4, 0.45);
  for (double r : {1.1, 1.3}) {
    auto [img, tau] = pm.evaluate(pt(r, 0));
    CHECK(tau == doctest::Approx(r * 1.0).epsilon(1e-8));
    CHECK((img - pt(r * std::cos(1.0), r * std::sin(1.0))).norm() < 1e-7);
  }
}

TEST_CASE("poincare map derivative matches the linear Poincare flow at p") {
  CatalogEntry e = catalog_get("shear_strip");
  Vec p = pt(0, 0.5);
  PoincareMapNum pm = poincare_map(e.X, p, 1.0, 3.0, 0.02, 1.0, 1e-11);
  Mat J = pm.jacobian_coords(Vec::Zero(1), 1e-5);
  LinearPoincareOp op = linear_poincare(e.X, p, 1.0, 1e-11);
  CHECK((J - op.M).norm() < 1e-5);
}

TEST_CASE("boundedness certificate: catalog values") {
  std::vector<double> tg = {-1.0, -0.5, 0.5, 1.0};

  // Constant field: all suprema are 1, so C = 1.05 up to rounding.
  DomainChart box = DomainChart::box(pt(-3, -3), pt(3, 3), 1.0);
  VectorFieldSpec Xc(box, [](const Vec&) { return pt(1, 0); },
                     [](const Vec&) { return Mat(Mat::Zero(2, 2)); });
  std::vector<Vec> grid;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) grid.push_back(pt(-1.6 + 0.8 * i, -1.6 + 0.8 * j));
  BoundednessCertificate cc = boundedness_certificate(Xc, grid, tg);
  CHECK(cc.C == doctest::Approx(1.05).epsilon(1e-6));

  // Rigid rotation on the annulus: sup |X| dominates (about 2).
  CatalogEntry rot = catalog_get("rigid_rotation");
  BoundednessCertificate cr = boundedness_certificate(rot.X, rot.grid, tg);
  CHECK(cr.C > 1.9);
  CHECK(cr.C < 2.2);

  // Linear saddle: |DX_t| = e dominates, C = 1.05 e.
  CatalogEntry sad = catalog_get("linear_saddle");
  BoundednessCertificate cs = boundedness_certificate(sad.X, sad.grid, tg);
  CHECK(cs.C == doctest::Approx(1.05 * std::exp(1.0)).epsilon(1e-9));
  CHECK(cs.conditions.at("c") == doctest::Approx(std::exp(1.0)).epsilon(1e-9));
}

TEST_CASE("calibrate: alpha capped at 1/2 for det-preserving flows") {
  CatalogEntry rot = catalog_get("rigid_rotation");
  std::vector<double> tg = {-1.0, -0.5, 0.5, 1.0};
  BoundednessCertificate cert = boundedness_certificate(rot.X, rot.grid, tg);
  Calibration cal = calibrate(rot.X, cert, rot.calibration_points, 2, 8, 3);
  CHECK(cal.alpha == doctest::Approx(0.5));
  CHECK(cal.beta > 0);
  CHECK(cert.alpha == cal.alpha);
}

TEST_CASE("calibrate + hitting band on the shear strip") {
  CatalogEntry e = catalog_get("shear_strip");
  std::vector<double> tg = {-1.0, -0.5, -0.25, 0.25, 0.5, 1.0};
  BoundednessCertificate cert = boundedness_certificate(e.X, e.grid, tg);
  CHECK(cert.C == doctest::Approx(2.854196).epsilon(1e-4));
  Calibration cal = calibrate(e.X, cert, e.calibration_points, 3, 12, 1);
  CHECK(cal.alpha == doctest::Approx(0.25));

  // Constant field: tau = n exactly for every sample.
  DomainChart box = DomainChart::box(pt(-3, -3), pt(3, 3), 1.0);
  VectorFieldSpec Xc(box, [](const Vec&) { return pt(1, 0); });
  BandReport rc = hitting_time_bounds_check(Xc, pt(-2, 0), 3, 20, 0.25, 0.2, 1.05, 5);
  CHECK(rc.pass);
  for (const auto& s : rc.samples) CHECK(std::abs(s.tau - 3.0) < 1e-9);

  // Rigid rotation: angular progress is uniform, tau = 2 within 1e-9.
  CatalogEntry rot = catalog_get("rigid_rotation");
  BandReport rr = hitting_time_bounds_check(rot.X, pt(1.4, 0), 2, 20, 0.25, 0.2, 2.05, 5);
  CHECK(rr.pass);
  for (const auto& s : rr.samples) CHECK(std::abs(s.tau - 2.0) < 1e-9);

  // Shear strip at the calibrated radius passes; a 10x inflated radius must
  // flag at least one out-of-band hitting time (value from the sweep oracle).
  BandReport b1 =
      hitting_time_bounds_check(e.X, pt(0, 0.3), 3, 40, cal.alpha, cal.beta, cert.C, 11);
  CHECK(b1.pass);
  BandReport b10 = hitting_time_bounds_check(e.X, pt(0, 0.3), 3, 40, cal.alpha, cal.beta,
                                             cert.C, 11, 10.0);
  CHECK(b10.violations >= 1);
}

TEST_CASE("linearizing coordinates: identity for linear flows") {
  CatalogEntry rot = catalog_get("rigid_rotation");
  Vec p = pt(1.5, 0);
  PsiCoordinates psi(rot.X, p, 2, 1e-3);
  Rng rng(9);
  for (int i = 0; i <= 2; ++i) {
    for (int s = 0; s < 3; ++s) {
      Vec c = rng.ball(1, 8e-4);
      Vec q = psi.section(i).point(c, rot.X.domain());
      Vec w = psi.forward(i, q);
      // psi = identity: linear coordinates equal the section coordinates
      CHECK((w - c).norm() < 1e-8);
    }
  }
  auto quant = psi.quantities(2, 10, 4);
  CHECK(quant.dpsi == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(quant.dpsi_inv == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(quant.det == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(quant.det_inv == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("linearizing coordinates: conjugation diagram on the shear strip") {
  CatalogEntry e = catalog_get("shear_strip");
  Vec p = pt(0, 0.25);
  double rho = 0.01;
  PsiCoordinates psi(e.X, p, 3, rho);
  BaseOrbit base(e.X, p, -0.5, 3.5);
  Rng rng(2);
  HitOptions ho;
  ho.horizon = 4.0;
  for (int i = 1; i <= 3; ++i) {
    Mat Pi = base.P(double(i));
    for (int s = 0; s < 4; ++s) {
      Vec c = rng.ball(1, 0.8 * rho);
      Vec y = psi.section(0).point(c, e.X.domain());
      SectionTarget tgt{psi.section(i).frame.p, psi.section(i).frame.u,
                        3 * psi.section(i).radius};
      Vec q = first_hit(e.X, y, tgt, ho, i - 1.0).point;
      // Psi_i o P^X_{p,i} = P_i o Psi_0 (the linearization diagram)
      Vec lhs = psi.forward(i, q);
      Vec rhs = Pi * c;
      CHECK((lhs - rhs).norm() < 1e-7 * std::max(1.0, rhs.norm() / rho));
    }
  }
  // Psi quantities stay below 2 at the calibrated radius and approach 1 as
  // the radius shrinks.
  double prev = 1e9;
  for (double r : {rho, rho / 2, rho / 4}) {
    PsiCoordinates ps(e.X, p, 3, r);
    auto q = ps.quantities(3, 8, 5);
    CHECK(q.max_all() < 2.0);
    double dev = std::abs(q.max_all() - 1.0);
    CHECK(dev <= prev + 1e-9);
    prev = dev;
  }
}
