#include <doctest.h>

#include <Eigen/LU>
#include <centra/catalog.hpp>
#include <centra/perturb.hpp>

#include <cmath>

using namespace centra;

namespace {
Vec pt(double x, double y) {
  Vec p(2);
  p << x, y;
  return p;
}
Vec v1(double x) {
  Vec p(1);
  p << x;
  return p;
}
}  // namespace

TEST_CASE("bump profile: flats, range and derivative bound") {
  BumpProfile chi;
  CHECK(chi.chi(0.05) == 0.0);
  CHECK(chi.chi(0.1) == 0.0);
  CHECK(chi.chi(0.9) == 1.0);
  CHECK(chi.chi(0.97) == 1.0);
  CHECK(chi.dchi(0.05) == 0.0);
  CHECK(chi.dchi(0.95) == 0.0);
  double sup = 0;
  for (double t = 0; t <= 1; t += 1e-3) {
    CHECK(chi.chi(t) >= 0.0);
    CHECK(chi.chi(t) <= 1.0);
    sup = std::max(sup, std::abs(chi.dchi(t)));
  }
  CHECK(sup <= chi.c1_norm() + 1e-12);
  CHECK(sup == doctest::Approx(chi.c1_norm()).epsilon(1e-3));
  // C1 continuity across the flats
  CHECK(std::abs(chi.chi(0.1 + 1e-8) - chi.chi(0.1 - 1e-8)) < 1e-12);
  CHECK(std::abs(chi.dchi(0.9 - 1e-8)) < 1e-6);
}

TEST_CASE("radial bump: identity outside, det scale inside, exact inverse") {
  Vec c = pt(0.2, -0.1);
  RadialBump b(c, 0.3, 0.8, 0.9);
  // identity outside the support, bitwise
  Vec far = c + pt(0.9, 0.2);
  CHECK((b.apply(far) - far).norm() == 0.0);
  CHECK((b.jacobian(far) - Mat::Identity(2, 2)).norm() == 0.0);
  // pure scaling inside the inner ball
  Vec in = c + pt(0.1, 0.05);
  CHECK((b.apply(in) - (c + 0.9 * pt(0.1, 0.05))).norm() < 1e-14);
  CHECK(std::abs(b.jacobian(in).determinant() - 0.81) < 1e-12);
  CHECK(b.logdet_gain(2) == doctest::Approx(-2 * std::log(0.9)).epsilon(1e-12));
  // inverse round trip at partial amplitude
  for (double a : {0.3, 1.0}) {
    for (double r : {0.1, 0.45, 0.7}) {
      Vec v = c + r * pt(0.6, 0.8);
      Vec w = b.apply(v, a);
      CHECK((b.invert(w, a) - v).norm() < 1e-11);
    }
  }
  // Jacobian vs finite differences on the ramp
  Vec ramp = c + pt(0.4, 0.25);
  Mat J = b.jacobian(ramp);
  double h = 1e-6;
  for (int j = 0; j < 2; ++j) {
    Vec e = Vec::Zero(2);
    e[j] = h;
    Vec col = (b.apply(ramp + e) - b.apply(ramp - e)) / (2 * h);
    CHECK((J.col(j) - col).norm() < 1e-8);
  }
}

TEST_CASE("cocycle perturbation: 1-D identity instance achieves K") {
  // A_i = 1 on U = (-1, 1), Delta = [-1/2, 1/2], K = 1, eps = 0.2: every
  // point of Delta must see |log det Dg^n - log det Df^n| > 1 by n1,
  // verified by direct chain composition.
  auto id = [](int) { return Mat(Mat::Identity(1, 1)); };
  Vec z = Vec::Zero(1);
  CocyclePerturbation cp = CocyclePerturbation::build(id, 1, z, 1.0, z, 0.5, 1.0, 0.2);
  CHECK(cp.n1() > 0);
  CHECK(cp.n1() <= 20);
  CocycleVerify v = cp.verify(1.0, 0.2, 16, 3);
  CHECK(v.pass);
  CHECK(v.min_distortion > 1.0);
  CHECK(v.c1_distance < 0.2);
  CHECK(v.support_exact);

  // the mean gain matches the per-step |log lambda_i| of the built bumps
  double total = 0;
  for (const auto& st : cp.steps())
    if (st.bump) total += st.bump->logdet_gain(1);
  CHECK(cp.n1() * cp.gain_per_step() == doctest::Approx(total).epsilon(1e-9));
  CHECK(total > 1.0);

  // points outside U are untouched for the whole chain
  Vec out = v1(3.0);
  for (int n = 1; n <= cp.n1(); ++n)
    CHECK((cp.orbit(out, n) - cp.orbit_linear(out, n)).norm() == 0.0);
}

TEST_CASE("cocycle perturbation: K = 0 returns the unperturbed cocycle") {
  auto id = [](int) { return Mat(Mat::Identity(1, 1)); };
  Vec z = Vec::Zero(1);
  CocyclePerturbation cp = CocyclePerturbation::build(id, 1, z, 1.0, z, 0.5, 0.0, 0.2);
  CHECK(cp.n1() == 0);
  CHECK(cp.steps().empty());
}

TEST_CASE("cocycle perturbation: 2-D rotating instance") {
  auto rot = [](int i) {
    Mat A(2, 2);
    double th = 0.4 + 0.1 * i;
    A << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    return A;
  };
  Vec z = Vec::Zero(2);
  CocyclePerturbation cp = CocyclePerturbation::build(rot, 2, z, 1.0, z, 0.5, 1.0, 0.2);
  CocycleVerify v = cp.verify(1.0, 0.2, 12, 5);
  CHECK(v.pass);
  CHECK(v.min_distortion > 1.0);
}

TEST_CASE("cocycle perturbation: infeasible budgets are reported") {
  auto id = [](int) { return Mat(Mat::Identity(1, 1)); };
  Vec z = Vec::Zero(1);
  CHECK_THROWS_AS(
      CocyclePerturbation::build(id, 1, z, 1.0, z, 0.5, 50.0, 0.01, 1e9, 8), Error);
  // Delta not compactly inside U
  CHECK_THROWS_AS(CocyclePerturbation::build(id, 1, z, 1.0, z, 1.0, 1.0, 0.2), Error);
}

TEST_CASE("tube region: constant field gives a straight cylinder") {
  DomainChart box = DomainChart::box(pt(-3, -3), pt(8, 3), 1.0);
  VectorFieldSpec Xc(box, [](const Vec&) { return pt(1, 0); },
                     [](const Vec&) { return Mat(Mat::Zero(2, 2)); });
  Vec p = pt(0, 0);
  TubeRegion tube(Xc, p, 0.2, 4, 0.25);
  tube.certify_injectivity(6, 8, 5);

  // base-orbit midpoint is a member with the expected chart
  Vec q = pt(2.0, 0.0);
  auto ch = tube.chart(q);
  REQUIRE(ch.has_value());
  CHECK(std::abs(ch->t0 - 2.0) < 1e-9);
  CHECK(ch->y0_coords.norm() < 1e-9);

  // membership equals the coordinate-box test x in [0, 4], |y| < 0.2
  CHECK(tube.chart(pt(3.2, 0.15)).has_value());
  CHECK(tube.chart(pt(1.0, 0.19))->y0_coords[0] == doctest::Approx(0.19).epsilon(1e-9));
  CHECK_FALSE(tube.chart(pt(1.0, 0.25)).has_value());   // outside the disk
  CHECK_FALSE(tube.chart(pt(-1.0, 0.0)).has_value());   // before the source
  CHECK_FALSE(tube.chart(pt(5.0, 0.0)).has_value());    // past the exit
  CHECK_FALSE(tube.chart(pt(2.0, 2.0)).has_value());    // far from the orbit

  // chart consistency: X_{t0}(y0) returns the query point
  auto c2 = tube.chart(pt(3.2, 0.15));
  Vec y0 = tube.source_point(c2->y0_coords);
  CHECK((flow(Xc, y0, c2->t0, 1e-11) - pt(3.2, 0.15)).norm() <= 1e-8);
}

TEST_CASE("lifted maps: identity bundle reproduces the Poincare maps") {
  CatalogEntry e = catalog_get("shear_strip");
  Vec p = pt(0, 0.25);
  double rU = 0.05;
  auto base = std::make_shared<BaseOrbit>(e.X, p, -1.3, 3.3);
  PerturbationBundle b = identity_bundle(*base, rU, 2);
  b.p = p;
  LiftedMaps lifted(e.X, base, b);

  HitOptions ho;
  ho.tol = 1e-11;
  ho.horizon = 2.0;
  Rng rng(3);
  for (int i = 1; i <= 2; ++i) {
    SectionTarget tgt{lifted.frame(i).p, lifted.frame(i).u, 2.0};
    for (int s = 0; s < 4; ++s) {
      Vec c = rng.ball(1, 0.7 * rU);
      Vec q = e.X.domain().exp(lifted.frame(i - 1).p, lifted.frame(i - 1).E * c);
      Vec via_g = lifted.g(i, q);
      Vec via_p = first_hit(e.X, q, tgt, ho, 0.02).point;
      CHECK((via_g - via_p).norm() < 1e-9);
    }
  }
}

TEST_CASE("lifted maps: det-bump g_1 stays C1-close to the Poincare map") {
  // d_C1(g_1, P) < 2 d_C1(g~_1, P-linear) + slack at small radius.
  CatalogEntry e = catalog_get("rigid_rotation");
  Vec p = pt(1.3, 0);
  double rU = 2e-3;
  auto base = std::make_shared<BaseOrbit>(e.X, p, -1.3, 3.3);
  PerturbationBundle b = det_bump_bundle(*base, rU, 2, 1, 0.95);
  double gtilde_c1 = b.delta1;
  LiftedMaps lifted(e.X, base, b);

  HitOptions ho;
  ho.tol = 1e-11;
  ho.horizon = 2.0;
  SectionTarget tgt{lifted.frame(1).p, lifted.frame(1).u, 0.4};
  double dc1 = 0;
  Rng rng(4);
  for (int s = 0; s < 6; ++s) {
    Vec c = rng.ball(1, 0.6 * rU);
    double h = 1e-4 * rU;
    Mat Jg = lifted.g_jacobian_coords(1, c, h);
    // Poincare-map Jacobian through the same frames
    auto pmap = [&](const Vec& cc) {
      Vec q = e.X.domain().exp(lifted.frame(0).p, lifted.frame(0).E * cc);
      Vec img = first_hit(e.X, q, tgt, ho, 0.02).point;
      return Vec(lifted.frame(1).coords(e.X.domain().displacement(lifted.frame(1).p, img)));
    };
    Mat Jp(1, 1);
    Jp.col(0) = (pmap(c + Vec(v1(h))) - pmap(c - Vec(v1(h)))) / (2 * h);
    dc1 = std::max(dc1, (Jg - Jp).norm());
  }
  CHECK(dc1 > 1e-3);                       // the bump genuinely acts
  CHECK(dc1 < 2.0 * gtilde_c1 + 0.02);     // conjugation inflates by < 2 + slack

  // outside the image of U the lifted map equals the Poincare map exactly
  Vec cfar = v1(3.0 * rU);
  Vec qfar = e.X.domain().exp(lifted.frame(0).p, lifted.frame(0).E * cfar);
  Vec g1 = lifted.g(1, qfar);
  Vec p1 = first_hit(e.X, qfar, tgt, ho, 0.02).point;
  CHECK((g1 - p1).norm() == 0.0);  // same code path: definition branch
}

TEST_CASE("realize: identity bundle returns Y = X") {
  CatalogEntry e = catalog_get("shear_strip");
  Vec p = pt(0, 0.25);
  double rU = 0.05;
  BaseOrbit base(e.X, p, -1.3, 3.3);
  PerturbationBundle b = identity_bundle(base, rU, 2);
  Realization real = realize(e.X, p, rU, 2, b, BumpProfile{}, 0.1, 0.25);
  RealizeChecks rc = real.verify(10, 11);
  CHECK(rc.pass);
  CHECK(rc.max_diff_outside == 0.0);
  CHECK(rc.d_c1_xy <= 1e-9);
  // points inside the tube also evaluate to X exactly for the identity bundle
  Vec q = e.X.domain().wrap(flow(e.X, p, 1.0, 1e-11));
  CHECK((real.field().difference(q)).norm() == 0.0);
}

TEST_CASE("realize: one det-bump on the shear strip") {
  CatalogEntry e = catalog_get("shear_strip");
  Vec p = pt(0, 0.25);
  double alpha = 0.25;
  double rU = 0.406 * e.X(p).norm() / (2.8542 * 2.8542);
  BaseOrbit base(e.X, p, -1.3, 3.3);
  PerturbationBundle b = det_bump_bundle(base, rU, 2, 1, 1.04);
  Realization real = realize(e.X, p, rU, 2, b, BumpProfile{}, 0.2, alpha);
  RealizeChecks rc = real.verify(14, 11, 1e-6);
  CAPTURE(rc.detail);
  CHECK(rc.pass);
  CHECK(rc.max_diff_outside == 0.0);
  CHECK(rc.max_poincare_mismatch < 1e-6);
  CHECK(rc.tau_in_band);

  // analytic Jacobian of Y against central differences inside the tube
  VectorFieldSpec Yf = real.Y(true);
  Vec q = e.X.domain().wrap(flow(e.X, pt(0, 0.251), 0.5, 1e-11));
  Mat Ja = real.field().jacobian_analytic(q);
  VectorFieldSpec Yfd = real.Y(false);  // FD-Jacobian surface
  Mat Jf = Yfd.jacobian(q);
  CHECK((Ja - Jf).norm() < 5e-4);
}

TEST_CASE("realize: eps budget shrinks with the disk radius") {
  CatalogEntry e = catalog_get("shear_strip");
  Vec p = pt(0, 0.25);
  double alpha = 0.25;
  double rho = 0.406 * e.X(p).norm() / (2.8542 * 2.8542);
  double prev = 1e300;
  for (double r : {rho, rho / 2, rho / 4}) {
    BaseOrbit base(e.X, p, -1.3, 3.3);
    PerturbationBundle b = det_bump_bundle(base, r, 2, 1, 1.04);
    Realization real = realize(e.X, p, r, 2, b, BumpProfile{}, 0.5, alpha);
    RealizeChecks rc = real.verify(8, 11);
    CHECK(rc.d_c1_xy <= prev * (1 + 1e-6));
    prev = rc.d_c1_xy;
  }
}

TEST_CASE("distort_pair: trivial K and hypothesis violations") {
  CatalogEntry e = catalog_get("rigid_rotation");
  DistortPairOptions o;
  o.certificate_grid = e.grid;
  o.calibration_points = e.calibration_points;
  DistortPairReport r0 = distort_pair(e.X, pt(1.3, 0), 0.05, pt(1.7, 0), 0.0, 0.2, o);
  CHECK(r0.pass);

  // x on the base orbit violates the avoidance hypothesis
  o.delta_samples = 4;
  o.step_cap = 6;
  CHECK_THROWS_AS(distort_pair(e.X, pt(1.3, 0), 0.05, pt(1.3, 0), 0.1, 0.2, o), Error);
  try {
    distort_pair(e.X, pt(1.3, 0), 0.05, pt(1.3, 0), 0.1, 0.2, o);
  } catch (const Error& err) {
    CHECK(err.code() == Errc::HypothesisUnverified);
  }
}

TEST_CASE("distort_pair: rigid rotation instance passes all conclusions") {
  CatalogEntry e = catalog_get("rigid_rotation");
  DistortPairOptions o;
  o.delta_samples = 8;
  o.step_cap = 6;
  o.certificate_grid = e.grid;
  o.calibration_points = e.calibration_points;
  DistortPairReport rep = distort_pair(e.X, pt(1.3, 0), 0.05, pt(1.7, 0), 0.1, 0.2, o);
  CAPTURE(rep.detail);
  CHECK(rep.pass);
  CHECK(rep.support_in_tube);
  CHECK(rep.c1_ok);
  CHECK(rep.per_step_ok);
  CHECK(rep.c0_ok);
  CHECK(rep.distortion_ok);
  CHECK(rep.min_max_distortion > 0.1);
}
