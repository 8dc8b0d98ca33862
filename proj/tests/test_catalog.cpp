#include <doctest.h>

#include <centra/catalog.hpp>
#include <centra/field_config.hpp>
#include <centra/integrate.hpp>

#include <cmath>

using namespace centra;

TEST_CASE("catalog: names resolve and unknown entries throw") {
  for (const auto& n : catalog_names()) {
    CatalogEntry e = catalog_get(n);
    CHECK(e.name == n);
  }
  CHECK_THROWS_AS(catalog_get("nope"), Error);
  try {
    catalog_get("nope");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::UnknownEntry);
  }
}

TEST_CASE("catalog: every entry passes its declared-tag checks") {
  for (const auto& n : catalog_names()) {
    auto fails = catalog_verify(n);
    CAPTURE(n);
    for (const auto& f : fails) MESSAGE(f);
    CHECK(fails.empty());
  }
}

TEST_CASE("catalog: morse singularities classified by the Hessian oracle") {
  CatalogEntry e = catalog_get("morse_gradient_torus");
  REQUIRE(e.X.singularities().size() == 4);
  int sinks = 0, sources = 0, saddles = 0;
  for (const auto& s : e.X.singularities()) {
    // independent check: eigenvalues of the (diagonal) Jacobian
    Mat J = e.X.jacobian(s.location);
    int neg = (J(0, 0) < 0) + (J(1, 1) < 0);
    std::string kind = neg == 2 ? "sink" : (neg == 0 ? "source" : "saddle");
    CHECK(kind == s.kind);
    sinks += s.kind == "sink";
    sources += s.kind == "source";
    saddles += s.kind == "saddle";
  }
  CHECK(sinks == 1);
  CHECK(sources == 1);
  CHECK(saddles == 2);
}

TEST_CASE("catalog: t3 ingredient functions behave per the construction") {
  CatalogEntry e = catalog_get("t3_collinear_not_qt");
  // X vanishes on the singular fiber and on the line over (1/2, 1/2).
  Vec on_fiber(3), on_line(3), generic(3);
  on_fiber << 0.5, 0.3, 0.8;
  on_line << 0.2, 0.5, 0.5;
  generic << 0.3, 0.2, 0.7;
  CHECK(e.X(on_fiber).norm() <= 1e-12);
  CHECK(e.X(on_line).norm() <= 1e-12);
  CHECK(e.X(generic).norm() > 1e-3);
  // Analytic Jacobian agrees with central differences at a generic point.
  Mat J = e.X.jacobian(generic);
  VectorFieldSpec fd(e.X.domain(), [&X = e.X](const Vec& q) { return X(q); });
  CHECK((J - fd.jacobian(generic)).norm() < 1e-6);
}

TEST_CASE("field config: builtin and polynomial fields") {
  ParsedConfig cfg = parse_config_text("[field]\nbuiltin = shear_strip\n");
  CatalogEntry e = field_from_config(cfg);
  CHECK(e.name == "shear_strip");

  // X = (y, x^2) on a box via monomial lists.
  std::string text =
      "# polynomial spec\n"
      "[domain]\n"
      "kind = box\n"
      "lower = -2,-2\n"
      "upper = 2,2\n"
      "radius = 1.0\n"
      "[field]\n"
      "component_1 = 1 0 1\n"
      "component_2 = 1 2 0\n";
  CatalogEntry p = field_from_config(parse_config_text(text));
  Vec q(2);
  q << 0.5, -0.3;
  CHECK((p.X(q) - Vec(Eigen::Vector2d(-0.3, 0.25))).norm() < 1e-14);
  Mat J = p.X.jacobian(q);
  CHECK(J(0, 1) == doctest::Approx(1.0));
  CHECK(J(1, 0) == doctest::Approx(1.0));

  CHECK_THROWS_AS(field_from_config(parse_config_text("[field]\nbuiltin = zzz\n")),
                  Error);
  CHECK_THROWS_AS(parse_config_text("[field\nbad"), Error);
}

TEST_CASE("suspension entry: return time equals the roof") {
  CatalogOptions opts;
  CatalogEntry e = catalog_get("suspension_rotation", opts);
  Vec p(2);
  p << 0.1, 0.0;
  double roof = 1.0 + opts.roof_amplitude * std::cos(2 * M_PI * 0.1);
  OrbitSegment seg = flow_orbit(e.X, p, 0, 2.0, {});
  Vec hit = seg.eval(roof);
  CHECK(std::abs(hit[1] - 1.0) < 1e-9);
  CHECK(std::abs(hit[0] - (0.1 + opts.suspension_theta)) < 1e-9);
}
