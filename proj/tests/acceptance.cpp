// Acceptance suite: one binary, one pass/fail line per criterion, every
// tolerance pinned in code. Exits nonzero when any criterion fails.

#include <centra/base_orbit.hpp>
#include <centra/catalog.hpp>
#include <centra/centralizer.hpp>
#include <centra/perturb.hpp>
#include <centra/poincare.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

using namespace centra;

namespace {

Vec pt(double x, double y) {
  Vec p(2);
  p << x, y;
  return p;
}
Vec pt3(double s, double x, double y) {
  Vec p(3);
  p << s, x, y;
  return p;
}

struct Gate {
  int passed = 0, failed = 0;

  void run(int idx, const std::string& label, double time_limit_s,
           const std::function<bool(std::string&)>& body) {
    auto t0 = std::chrono::steady_clock::now();
    bool ok = false;
    std::string detail;
    try {
      ok = body(detail);
    } catch (const std::exception& e) {
      ok = false;
      detail = std::string("exception: ") + e.what();
    }
    double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (time_limit_s > 0 && dt > time_limit_s) {
      ok = false;
      detail += " [over time limit]";
    }
    std::printf("[%2d] %s %s (%.1fs)%s%s\n", idx, ok ? "PASS" : "FAIL", label.c_str(), dt,
                detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
    (ok ? passed : failed)++;
  }
};

double max_abs(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

int main() {
  Gate gate;

  // 1. Commutation residuals of every catalog commuting pair.
  gate.run(1, "commutation residual <= 1e-6 on the declared grids", 30, [](std::string& d) {
    std::vector<double> tg = {-2.0, -1.0, -0.5, 0.5, 1.0, 2.0};
    bool ok = true;
    double worst = 0;
    for (const char* name : {"annulus_unit_speed", "rigid_rotation", "t3_collinear_not_qt"}) {
      CatalogEntry e = catalog_get(name);
      CommutationReport rep = commutation_residual(e.X, *e.Y, e.grid, tg, 1e-6);
      worst = std::max({worst, rep.max_bracket, rep.max_flow_residual});
      ok = ok && rep.verdict;
    }
    d = "max residual " + std::to_string(worst);
    return ok;
  });

  // 2. Collinearity-function recovery on the unit-speed annulus.
  gate.run(2, "recover_f = r within 1e-8 at 20 points, invariant to 1e-6", 30,
           [](std::string& d) {
             CatalogEntry e = catalog_get("annulus_unit_speed");
             Rng rng(21);
             bool ok = true;
             double worst = 0;
             for (int i = 0; i < 20; ++i) {
               double r = rng.uniform(1.05, 1.95);
               double th = rng.uniform(0.0, 2 * M_PI);
               Vec p = pt(r * std::cos(th), r * std::sin(th));
               double val = recover_f(e.X, *e.Y, p);
               worst = std::max(worst, std::abs(val - r));
               ok = ok && std::abs(val - r) <= 1e-8;
             }
             // orbit invariance of the recovered function over t in [0, 10]
             Vec p0 = pt(1.4, 0.2);
             double f0 = recover_f(e.X, *e.Y, p0);
             IntegrateOptions opts;
             opts.tol = 1e-11;
             OrbitSegment seg = flow_orbit(e.X, p0, 0, 10, opts);
             double res = 0;
             for (double t = 0.5; t <= 10.0; t += 0.5) {
               Vec q = e.X.domain().wrap(seg.eval(t));
               res = std::max(res, std::abs(recover_f(e.X, *e.Y, q) - f0));
             }
             ok = ok && res <= 1e-6;
             d = "max |f - r| = " + std::to_string(worst) +
                 ", invariance residual = " + std::to_string(res);
             return ok;
           });

  // 3. Linear Poincare flow: composition identity and isometry values.
  gate.run(3, "LPF composition within 1e-6; logabsdet = 0 on isometries", 60,
           [](std::string& d) {
             Rng rng(33);
             bool ok = true;
             double worstc = 0;
             for (const char* name : {"rigid_rotation", "torus_linear", "shear_strip"}) {
               CatalogEntry e = catalog_get(name);
               for (int i = 0; i < 20; ++i) {
                 Vec p = e.grid[(7 * i + 3) % e.grid.size()];
                 if (std::string(name) == "shear_strip" && std::abs(p[1]) > 1.0) continue;
                 double s = rng.uniform(-1.2, 1.2), t = rng.uniform(-1.2, 1.2);
                 try {
                   LinearPoincareOp whole = linear_poincare(e.X, p, s + t, 1e-10);
                   LinearPoincareOp first = linear_poincare(e.X, p, s, 1e-10);
                   Vec ps = e.X.domain().wrap(flow(e.X, p, s, 1e-10));
                   LinearPoincareOp second = linear_poincare(e.X, ps, t, 1e-10);
                   double c = std::abs(whole.logabsdet -
                                       (first.logabsdet + second.logabsdet));
                   worstc = std::max(worstc, c);
                   ok = ok && c <= 1e-6;
                 } catch (const Error&) {
                   // box exits on extreme samples are skipped, not failures
                 }
               }
             }
             for (const char* name : {"rigid_rotation", "torus_linear"}) {
               CatalogEntry e = catalog_get(name);
               for (int i = 0; i < 10; ++i) {
                 Vec p = e.grid[(13 * i + 5) % e.grid.size()];
                 double t = rng.uniform(-3.0, 3.0);
                 double v = std::abs(linear_poincare(e.X, p, t, 1e-10).logabsdet);
                 ok = ok && v <= 1e-8;
                 worstc = std::max(worstc, v);
               }
             }
             d = "worst deviation " + std::to_string(worstc);
             return ok;
           });

  // 4. Hitting-time band on the shear strip after calibration.
  gate.run(4, "200/200 hitting times in [n-alpha, n+alpha] for n <= 5", 60,
           [](std::string& d) {
             CatalogEntry e = catalog_get("shear_strip");
             std::vector<double> tg = {-1.0, -0.5, -0.25, 0.25, 0.5, 1.0};
             BoundednessCertificate cert = boundedness_certificate(e.X, e.grid, tg);
             Calibration cal = calibrate(e.X, cert, e.calibration_points, 3, 12, 4);
             Vec p = pt(0, 0);
             int total = 0, in_band = 0;
             for (int n = 1; n <= 5; ++n) {
               BandReport rep = hitting_time_bounds_check(e.X, p, n, 40, cal.alpha,
                                                          cal.beta, cert.C, 40 + n);
               for (const auto& s : rep.samples) {
                 ++total;
                 if (s.pass) ++in_band;
               }
             }
             d = std::to_string(in_band) + "/" + std::to_string(total) +
                 " in band, alpha = " + std::to_string(cal.alpha) +
                 ", beta = " + std::to_string(cal.beta);
             return total == 200 && in_band == 200;
           });

  // 5. Linearizing-coordinate bounds on the shear strip.
  gate.run(5, "Psi quantities < 2 at 50 samples, decreasing over the rho sweep", 120,
           [](std::string& d) {
             CatalogEntry e = catalog_get("shear_strip");
             Vec p = pt(0, 0.25);
             double C = 2.8542, beta = 0.406;
             double rho = beta * e.X(p).norm() / std::pow(C, 3);
             bool ok = true;
             double prev = 1e300, worst = 0, tail = 0;
             for (double r : {rho, rho / 2, rho / 4}) {
               PsiCoordinates psi(e.X, p, 3, r);
               double level = 0;
               for (int i = 1; i <= 3; ++i) {
                 auto q = psi.quantities(i, 17, 50 + i);
                 level = std::max(level, q.max_all());
               }
               ok = ok && level < 2.0;
               worst = std::max(worst, level);
               double dev = std::abs(level - 1.0);
               ok = ok && dev <= prev + 1e-9;
               prev = dev;
               tail = level;
             }
             d = "max quantity " + std::to_string(worst) + ", final " +
                 std::to_string(tail);
             return ok;
           });

  // 6. Realization: identity bundle and a det-bump bundle on the shear strip.
  gate.run(6, "realize: identity exact, det-bump matches g_i to 1e-6, tau in band", 300,
           [](std::string& d) {
             CatalogEntry e = catalog_get("shear_strip");
             Vec p = pt(0, 0.25);
             double alpha = 0.25, C = 2.8542, beta = 0.406;
             double rU = beta * e.X(p).norm() / (C * C);
             bool ok = true;

             BaseOrbit base(e.X, p, -1.3, 3.3);
             PerturbationBundle ib = identity_bundle(base, rU, 2);
             Realization ident = realize(e.X, p, rU, 2, ib, BumpProfile{}, 0.1, alpha);
             RealizeChecks ric = ident.verify(10, 6);
             ok = ok && ric.max_diff_outside == 0.0 && ric.d_c1_xy <= 1e-9;

             PerturbationBundle bb = det_bump_bundle(base, rU, 2, 1, 1.04);
             Realization bump = realize(e.X, p, rU, 2, bb, BumpProfile{}, 0.2, alpha);
             RealizeChecks rc = bump.verify(50, 7, 1e-6);
             ok = ok && rc.max_diff_outside == 0.0;          // support exact zero
             ok = ok && rc.max_poincare_mismatch <= 1e-6;    // g_i reproduced
             ok = ok && rc.tau_in_band;
             d = "identity dC1 = " + std::to_string(ric.d_c1_xy) + "; det-bump " +
                 rc.detail;
             return ok;
           });

  // 7. Finite-step cocycle construction bullets in 1-D and 2-D.
  gate.run(7, "cocycle substitute bullets at K = 1, eps = 0.2 (1-D and 2-D)", 60,
           [](std::string& d) {
             Vec z1 = Vec::Zero(1);
             auto id = [](int) { return Mat(Mat::Identity(1, 1)); };
             CocyclePerturbation c1 =
                 CocyclePerturbation::build(id, 1, z1, 1.0, z1, 0.5, 1.0, 0.2);
             CocycleVerify v1 = c1.verify(1.0, 0.2, 25, 71);

             Vec z2 = Vec::Zero(2);
             auto rot = [](int i) {
               Mat A(2, 2);
               double th = 0.3 + 0.15 * i;
               A << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
               return A;
             };
             CocyclePerturbation c2 =
                 CocyclePerturbation::build(rot, 2, z2, 1.0, z2, 0.5, 1.0, 0.2);
             CocycleVerify v2 = c2.verify(1.0, 0.2, 25, 72);
             d = "1-D: n1 = " + std::to_string(c1.n1()) + ", min distortion " +
                 std::to_string(v1.min_distortion) + "; 2-D: n1 = " +
                 std::to_string(c2.n1()) + ", min distortion " +
                 std::to_string(v2.min_distortion);
             return v1.pass && v2.pass && v1.min_distortion > 1.0 &&
                    v2.min_distortion > 1.0;
           });

  // 8. Distortion pipeline on the shear strip.
  gate.run(8, "distort_pair: five conclusions at K = 0.5, eps = 0.1, 25 samples", 600,
           [](std::string& d) {
             CatalogEntry e = catalog_get("shear_strip");
             DistortPairOptions o;
             o.delta_samples = 25;
             o.step_cap = 40;
             o.seed = 8;
             o.certificate_grid = e.grid;
             o.calibration_points = e.calibration_points;
             DistortPairReport rep =
                 distort_pair(e.X, pt(0, 2e-8), 1e-4, pt(-3.5, 2e-8), 0.5, 0.1, o);
             d = rep.detail + " (" + std::to_string(rep.distortion_achieved) + "/" +
                 std::to_string(rep.distortion_total) + ")";
             return rep.pass;
           });

  // 9. Expansivity phenomenology of the probes.
  gate.run(9, "separating probe: witness on the gradient field, none on the annulus",
           240, [](std::string& d) {
             CatalogEntry m = catalog_get("morse_gradient_torus");
             Rng rng1(9);
             SeparatingReport rm = separating_probe(m.X, 0.1, 50.0, 100, rng1,
                                                    PairSampler::Offset, 0.03, 1e-8,
                                                    m.wandering);
             CatalogEntry a = catalog_get("annulus_unit_speed");
             Rng rng2(9);
             SeparatingReport ra = separating_probe(a.X, 0.05, 200.0, 100, rng2,
                                                    PairSampler::IndependentUniform);
             d = "gradient field " + std::to_string(rm.witnesses) +
                 " witnesses, annulus " + std::to_string(ra.witnesses);
             return rm.witnesses >= 1 && ra.witnesses == 0;
           });

  // 10. Saddle gradient decay series.
  gate.run(10, "linear saddle: sup |grad f| equals r_k within 1e-9", 30,
           [](std::string& d) {
             CatalogEntry e = catalog_get("linear_saddle");
             std::vector<double> radii = {0.1, 0.01, 0.001};
             GradientDecayReport rep = gradient_decay_probe(
                 *e.f, e.X, e.X.find_singularity("saddle")->location, radii);
             bool ok = true;
             double worst = 0;
             for (int k = 0; k < 3; ++k) {
               worst = std::max(worst, std::abs(rep.sup_grad[k] - radii[k]));
               ok = ok && std::abs(rep.sup_grad[k] - radii[k]) <= 1e-9;
             }
             d = "max deviation " + std::to_string(worst);
             return ok;
           });

  // 11. Denjoy-Koksma deviation along golden-mean denominators.
  gate.run(11, "deviation at q6 = 13 below q1 = 1, matching direct sums to 1e-10", 30,
           [](std::string& d) {
             const double golden = 0.6180339887498949;
             auto tau = [](double x) { return 1.0 + 0.1 * std::cos(2 * M_PI * x); };
             BirkhoffDeviationReport rep = birkhoff_deviation(tau, golden, 6, 256);
             if (rep.denominators != std::vector<long long>{1, 2, 3, 5, 8, 13}) {
               d = "unexpected denominators";
               return false;
             }
             // direct-summation oracle, independent loop
             bool ok = true;
             double worst = 0;
             const int m = 1 << 16;
             double T = 0;
             for (int j = 0; j < m; ++j) T += tau(j / double(m));
             T /= m;
             for (std::size_t k = 0; k < rep.denominators.size(); ++k) {
               long long qn = rep.denominators[k];
               double sup = 0;
               for (int g = 0; g < 256; ++g) {
                 double sum = 0, y = g / 256.0;
                 for (long long l = 0; l < qn; ++l) {
                   sum += tau(y);
                   y += golden;
                   y -= std::floor(y);
                 }
                 sup = std::max(sup, std::abs(sum - T * qn));
               }
               worst = std::max(worst, std::abs(sup - rep.deviation[k]));
               ok = ok && std::abs(sup - rep.deviation[k]) <= 1e-10;
             }
             ok = ok && rep.deviation[5] < rep.deviation[0];
             d = "series " + std::to_string(rep.deviation[0]) + " -> " +
                 std::to_string(rep.deviation[5]) + ", oracle gap " +
                 std::to_string(worst);
             return ok;
           });

  // 12. The fibered torus example.
  gate.run(12, "T^3 pair: commutation, collinearity and the ratio (1+2s)^2", 60,
           [](std::string& d) {
             CatalogEntry e = catalog_get("t3_collinear_not_qt");
             std::vector<double> tg = {-1.0, -0.5, 0.5, 1.0};
             CommutationReport rep = commutation_residual(e.X, *e.Y, e.grid, tg, 1e-6);
             bool ok = rep.verdict;
             Rng rng(12);
             double worst_defect = 0;
             for (int i = 0; i < 50; ++i) {
               double s = rng.uniform(0.0, 1.0);
               if (std::abs(s - 0.5) < 0.1) s = 0.3;  // stay off the singular fiber
               Vec q = pt3(s, rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0));
               if (e.X(q).norm() < 1e-6) continue;  // skip the singular line
               worst_defect = std::max(worst_defect, collinearity_defect(e.X, *e.Y, q));
             }
             ok = ok && worst_defect <= 1e-9;
             double val = recover_f(e.X, *e.Y, pt3(0.25, 0.2, 0.7));
             ok = ok && std::abs(val - 2.25) <= 1e-6;
             d = "flow residual " + std::to_string(rep.max_flow_residual) +
                 ", defect " + std::to_string(worst_defect) + ", ratio " +
                 std::to_string(val);
             return ok;
           });

  std::printf("acceptance: %d/%d criteria passed\n", gate.passed,
              gate.passed + gate.failed);
  return gate.failed == 0 ? 0 : 1;
}
