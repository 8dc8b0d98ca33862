// Command-line front end: catalog flows, Poincare diagnostics, centralizer
// probes and the tube-perturbation pipeline. Every subcommand prints a
// one-line verdict, writes a JSON report to --out (plus optional CSV), and
// exits 0 on pass, 2 on fail, 1 on operational error with a machine-readable
// error object on stderr. Reports are byte-deterministic for fixed flags and
// seed; timestamps go to a separate <out>.meta sidecar.

#include <CLI11.hpp>
#include <json.hpp>

#include <centra/base_orbit.hpp>
#include <centra/catalog.hpp>
#include <centra/centralizer.hpp>
#include <centra/field_config.hpp>
#include <centra/integrate.hpp>
#include <centra/perturb.hpp>
#include <centra/poincare.hpp>
#include <centra/reports.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace centra;
using ordered_json = nlohmann::ordered_json;

namespace {

Vec parse_point(const std::string& s) {
  std::vector<double> vals;
  std::string tok;
  std::istringstream is(s);
  while (std::getline(is, tok, ',')) {
    if (tok.empty()) continue;
    vals.push_back(std::stod(tok));
  }
  if (vals.empty()) fail(Errc::BadConfig, "empty point '" + s + "'");
  return Eigen::Map<Vec>(vals.data(), vals.size());
}

ordered_json vec_json(const Vec& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

struct Common {
  std::string catalog;
  std::string config;
  std::string out;
  std::string csv;
  std::uint64_t seed = 2026;
  double tol = 1e-6;
  double theta = 0.5;
};

void add_common(CLI::App* cmd, Common& c, const std::string& default_out) {
  cmd->add_option("--catalog", c.catalog, "catalog entry name");
  cmd->add_option("--config", c.config, "field config file (key=value sections)");
  cmd->add_option("--out", c.out, "JSON report path")->default_val(default_out);
  cmd->add_option("--csv", c.csv, "optional CSV output path");
  cmd->add_option("--seed", c.seed, "pseudorandom seed recorded in the report");
  cmd->add_option("--tol", c.tol, "verdict tolerance");
  cmd->add_option("--theta", c.theta, "inclination for torus_linear");
}

CatalogEntry load_field(const Common& c) {
  CatalogOptions opts;
  opts.theta = c.theta;
  if (!c.config.empty()) return field_from_config(parse_config_file(c.config), opts);
  if (!c.catalog.empty()) return catalog_get(c.catalog, opts);
  fail(Errc::BadConfig, "select a field with --catalog or --config");
}

// Fallback grids for config-defined fields without a declared grid.
std::vector<Vec> ensure_grid(const CatalogEntry& e) {
  if (!e.grid.empty()) return e.grid;
  std::vector<Vec> pts;
  const DomainChart& dom = e.X.domain();
  if (dom.kind() == ChartKind::Annulus) {
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 8; ++j) {
        double r = dom.annulus_inner() +
                   (dom.annulus_outer() - dom.annulus_inner()) * (0.1 + 0.8 * i / 4.0);
        double th = 2 * M_PI * j / 8.0;
        Vec p(2);
        p << r * std::cos(th), r * std::sin(th);
        pts.push_back(p);
      }
    return pts;
  }
  Vec lo, hi;
  if (dom.kind() == ChartKind::Torus) {
    lo = Vec::Zero(dom.dim());
    hi = dom.periods();
  } else {
    lo = dom.lower() + 0.15 * (dom.upper() - dom.lower());
    hi = dom.upper() - 0.15 * (dom.upper() - dom.lower());
  }
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) {
      Vec p(dom.dim());
      p[0] = lo[0] + (hi[0] - lo[0]) * (i + 0.5) / 6.0;
      p[1] = lo[1] + (hi[1] - lo[1]) * (j + 0.5) / 6.0;
      for (int k = 2; k < dom.dim(); ++k) p[k] = lo[k] + 0.37 * (hi[k] - lo[k]);
      pts.push_back(p);
    }
  return pts;
}

int emit(const Common& c, const std::string& command, const ordered_json& params,
         bool verdict, ordered_json payload, const std::string& line) {
  ordered_json rep;
  rep["command"] = command;
  rep["params"] = params;
  rep["seed"] = c.seed;
  rep["verdict"] = verdict ? "pass" : "fail";
  rep["payload"] = std::move(payload);
  if (!c.out.empty() && c.out != "-") {
    std::ofstream os(c.out);
    if (!os) fail(Errc::BadConfig, "cannot write " + c.out);
    os << rep.dump(2) << "\n";
    // timestamp sidecar keeps the report itself reproducible
    std::ofstream meta(c.out + ".meta");
    auto now = std::chrono::system_clock::now().time_since_epoch();
    meta << "written_unix_ms="
         << std::chrono::duration_cast<std::chrono::milliseconds>(now).count() << "\n";
  }
  std::cout << command << " " << (verdict ? "pass" : "fail") << ": " << line << "\n";
  return verdict ? 0 : 2;
}

ordered_json parse_payload(const std::string& json_text) {
  return ordered_json::parse(json_text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vector-field centralizer diagnostics"};
  app.require_subcommand(1);

  Common c_flow;
  std::string flow_p;
  double flow_t = 1.0;
  int flow_samples = 200;
  bool flow_var = false;
  auto* cmd_flow = app.add_subcommand("flow", "integrate the flow map X_t(p)");
  add_common(cmd_flow, c_flow, "flow_report.json");
  cmd_flow->add_option("--p", flow_p, "start point x1,..,xd")->required();
  cmd_flow->add_option("--t", flow_t, "integration time");
  cmd_flow->add_option("--samples", flow_samples, "orbit dump samples for --csv");
  cmd_flow->add_flag("--variational", flow_var,
                     "append the d^2 tangent-flow columns to the CSV");

  Common c_var;
  std::string var_p;
  double var_t = 1.0;
  auto* cmd_var = app.add_subcommand("variational", "tangent flow DX_t(p)");
  add_common(cmd_var, c_var, "variational_report.json");
  cmd_var->add_option("--p", var_p)->required();
  cmd_var->add_option("--t", var_t);

  Common c_br;
  std::string br_p, br_catalog2, br_config2;
  auto* cmd_br = app.add_subcommand("bracket", "Lie bracket [X, Y](p)");
  add_common(cmd_br, c_br, "bracket_report.json");
  cmd_br->add_option("--p", br_p)->required();
  cmd_br->add_option("--field2-catalog", br_catalog2, "second field (catalog)");
  cmd_br->add_option("--field2-config", br_config2, "second field (config)");

  Common c_po;
  std::string po_p, po_q, po_sweep;
  double po_t = 1.0, po_n = 0, po_radius = 0.05, po_horizon = 0;
  auto* cmd_po =
      app.add_subcommand("poincare", "linear Poincare flow, optional map evaluation");
  add_common(cmd_po, c_po, "poincare_report.json");
  cmd_po->add_option("--p", po_p)->required();
  cmd_po->add_option("--t", po_t, "time for the linear Poincare operator");
  cmd_po->add_option("--map-n", po_n, "evaluate the map to the section at X_n(p)");
  cmd_po->add_option("--q", po_q, "map argument (defaults to p)");
  cmd_po->add_option("--radius", po_radius, "source disk radius for the map");
  cmd_po->add_option("--horizon", po_horizon, "hitting horizon");
  cmd_po->add_option("--sweep", po_sweep, "t0,t1,count sweep written to --csv");

  Common c_cm;
  std::string cm_catalog2, cm_config2, cm_tgrid = "-1,-0.5,0.5,1";
  auto* cmd_cm = app.add_subcommand("commute", "commutation residuals of (X, Y)");
  add_common(cmd_cm, c_cm, "commute_report.json");
  cmd_cm->add_option("--field2-catalog", cm_catalog2);
  cmd_cm->add_option("--field2-config", cm_config2);
  cmd_cm->add_option("--t-grid", cm_tgrid, "comma list of flow times");

  Common c_rf;
  std::string rf_p;
  double rf_expect = std::nan("");
  auto* cmd_rf = app.add_subcommand("recover-f", "collinearity function <X,Y>/<X,X>");
  add_common(cmd_rf, c_rf, "recover_f_report.json");
  cmd_rf->add_option("--p", rf_p)->required();
  cmd_rf->add_option("--expected", rf_expect, "verdict checks |value - expected| <= tol");

  Common c_di;
  std::string di_x, di_y;
  int di_N = 10;
  auto* cmd_di = app.add_subcommand("distortion", "normal distortion series Delta_1..N");
  add_common(cmd_di, c_di, "distortion_report.json");
  cmd_di->add_option("--x", di_x)->required();
  cmd_di->add_option("--y", di_y)->required();
  cmd_di->add_option("--N", di_N);

  Common c_und;
  double und_K = 1.0;
  int und_N = 20, und_pairs = 10;
  double und_offset = 0.2;
  auto* cmd_und = app.add_subcommand("und", "unbounded-normal-distortion probe");
  add_common(cmd_und, c_und, "und_report.json");
  cmd_und->add_option("--K", und_K);
  cmd_und->add_option("--N", und_N);
  cmd_und->add_option("--pairs", und_pairs);
  cmd_und->add_option("--offset-scale", und_offset);

  Common c_se;
  double se_eps = 0.1, se_T = 50, se_offset = 0.03;
  int se_pairs = 100;
  std::string se_sampler = "independent", se_expect = "any";
  auto* cmd_se = app.add_subcommand("separating", "finite-horizon separating probe");
  add_common(cmd_se, c_se, "separating_report.json");
  cmd_se->add_option("--eps", se_eps);
  cmd_se->add_option("--T", se_T);
  cmd_se->add_option("--pairs", se_pairs);
  cmd_se->add_option("--sampler", se_sampler)
      ->check(CLI::IsMember({"independent", "offset"}));
  cmd_se->add_option("--offset-scale", se_offset);
  cmd_se->add_option("--expect", se_expect)
      ->check(CLI::IsMember({"any", "witness", "none"}));

  Common c_ki;
  double ki_eps = 0.05, ki_T = 20, ki_offset = 0.05;
  int ki_pairs = 10;
  std::string ki_deltas = "0.1,0.2";
  auto* cmd_ki = app.add_subcommand("kinematic", "kinematic expansivity probe");
  add_common(cmd_ki, c_ki, "kinematic_report.json");
  cmd_ki->add_option("--eps", ki_eps);
  cmd_ki->add_option("--T", ki_T);
  cmd_ki->add_option("--pairs", ki_pairs);
  cmd_ki->add_option("--delta-grid", ki_deltas);
  cmd_ki->add_option("--offset-scale", ki_offset);

  Common c_gd;
  std::string gd_radii = "0.1,0.01,0.001", gd_sigma;
  auto* cmd_gd = app.add_subcommand("gradient-decay",
                                    "sup |grad f| over shrinking spheres at a saddle");
  add_common(cmd_gd, c_gd, "gradient_decay_report.json");
  cmd_gd->add_option("--radii", gd_radii);
  cmd_gd->add_option("--sigma", gd_sigma, "saddle location (defaults to the entry's)");

  Common c_bi;
  double bi_theta = 0.6180339887498949, bi_amp = 0.1;
  int bi_K = 6, bi_grid = 256;
  auto* cmd_bi = app.add_subcommand(
      "birkhoff", "deviation sums along continued-fraction denominators");
  add_common(cmd_bi, c_bi, "birkhoff_report.json");
  cmd_bi->add_option("--rotation", bi_theta, "rotation number");
  cmd_bi->add_option("--amplitude", bi_amp, "return time 1 + A cos(2 pi x)");
  cmd_bi->add_option("--K", bi_K, "number of denominators");
  cmd_bi->add_option("--grid", bi_grid, "sup sample grid");

  Common c_ce;
  int ce_band_n = 3;
  auto* cmd_ce = app.add_subcommand("certify", "boundedness certificate and calibration");
  add_common(cmd_ce, c_ce, "certificate.json");
  cmd_ce->add_option("--band-n", ce_band_n, "band-check horizon during calibration");

  Common c_pr;
  std::string pr_p;
  int pr_n0 = 2, pr_stage = 1;
  double pr_lambda = 1.04, pr_eps = 0.2, pr_radius = 0;
  bool pr_identity = false;
  auto* cmd_pr = app.add_subcommand("perturb-realize",
                                    "realize a perturbation bundle as a nearby field");
  add_common(cmd_pr, c_pr, "perturb_realize_report.json");
  cmd_pr->add_option("--p", pr_p)->required();
  cmd_pr->add_option("--n0", pr_n0);
  cmd_pr->add_option("--radius", pr_radius, "source disk radius (0: calibrated)");
  cmd_pr->add_option("--bump-stage", pr_stage);
  cmd_pr->add_option("--bump-lambda", pr_lambda);
  cmd_pr->add_option("--eps", pr_eps);
  cmd_pr->add_flag("--identity", pr_identity, "identity bundle (Y = X)");

  Common c_dp;
  std::string dp_p, dp_x;
  double dp_K = 0.5, dp_eps = 0.1, dp_eta = 0.05, dp_delta = 1e-4;
  int dp_samples = 25, dp_cap = 40;
  auto* cmd_dp = app.add_subcommand("distort-pair",
                                    "distortion pipeline: cocycle -> lift -> realize");
  add_common(cmd_dp, c_dp, "distort_pair_report.json");
  cmd_dp->add_option("--p", dp_p)->required();
  cmd_dp->add_option("--x", dp_x)->required();
  cmd_dp->add_option("--K", dp_K);
  cmd_dp->add_option("--eps", dp_eps);
  cmd_dp->add_option("--eta", dp_eta);
  cmd_dp->add_option("--delta-radius", dp_delta);
  cmd_dp->add_option("--samples", dp_samples);
  cmd_dp->add_option("--step-cap", dp_cap);

  Common c_cl;
  bool cl_verify = false;
  auto* cmd_cl = app.add_subcommand("catalog-list", "list catalog entries");
  add_common(cmd_cl, c_cl, "catalog_report.json");
  cmd_cl->add_flag("--verify", cl_verify, "run every entry's declared-tag checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*cmd_flow) {
      CatalogEntry e = load_field(c_flow);
      Vec p = parse_point(flow_p);
      double tol = std::min(c_flow.tol, 1e-9);
      Vec q = e.X.domain().wrap(flow(e.X, p, flow_t, tol));
      if (!c_flow.csv.empty())
        write_orbit_csv(c_flow.csv, e.X, p, 0, flow_t, flow_samples, flow_var, tol);
      ordered_json pay;
      pay["point"] = vec_json(q);
      pay["t"] = flow_t;
      ordered_json params{{"field", e.name}, {"p", flow_p}, {"t", flow_t}};
      std::ostringstream os;
      os.precision(12);
      os << "X_t(p) = [" << q.transpose() << "]";
      return emit(c_flow, "flow", params, true, pay, os.str());
    }

    if (*cmd_var) {
      CatalogEntry e = load_field(c_var);
      Vec p = parse_point(var_p);
      Mat W = variational(e.X, p, var_t, std::min(c_var.tol, 1e-9));
      ordered_json pay;
      ordered_json rows = ordered_json::array();
      for (int i = 0; i < W.rows(); ++i) {
        ordered_json row = ordered_json::array();
        for (int j = 0; j < W.cols(); ++j) row.push_back(W(i, j));
        rows.push_back(row);
      }
      pay["matrix"] = rows;
      if (!c_var.csv.empty())
        write_orbit_csv(c_var.csv, e.X, p, 0, var_t, 200, true, 1e-10);
      ordered_json params{{"field", e.name}, {"p", var_p}, {"t", var_t}};
      std::ostringstream os;
      os << "|DX_t(p)| = " << W.norm();
      return emit(c_var, "variational", params, true, pay, os.str());
    }

    if (*cmd_br) {
      CatalogEntry e = load_field(c_br);
      CatalogEntry e2;
      if (br_catalog2.empty() && br_config2.empty()) {
        if (!e.Y) fail(Errc::BadConfig, "entry has no companion; pass --field2-*");
        e2.name = e.name + "_companion";
        e2.X = *e.Y;
      } else {
        Common c2 = c_br;
        c2.catalog = br_catalog2;
        c2.config = br_config2;
        e2 = load_field(c2);
      }
      Vec p = parse_point(br_p);
      Vec b = lie_bracket(e.X, e2.X, p);
      ordered_json pay;
      pay["bracket"] = vec_json(b);
      pay["norm"] = b.norm();
      ordered_json params{{"field", e.name}, {"field2", e2.X.name()}, {"p", br_p}};
      std::ostringstream os;
      os << "|[X,Y](p)| = " << b.norm();
      return emit(c_br, "bracket", params, true, pay, os.str());
    }

    if (*cmd_po) {
      CatalogEntry e = load_field(c_po);
      Vec p = parse_point(po_p);
      LinearPoincareOp op = linear_poincare(e.X, p, po_t, 1e-10);
      ordered_json pay;
      pay["t"] = po_t;
      pay["logabsdet"] = op.logabsdet;
      ordered_json mat = ordered_json::array();
      for (int i = 0; i < op.M.rows(); ++i)
        for (int j = 0; j < op.M.cols(); ++j) mat.push_back(op.M(i, j));
      pay["matrix"] = mat;
      if (po_n > 0) {
        PoincareMapNum pm =
            poincare_map(e.X, p, po_n, po_horizon > 0 ? po_horizon : po_n + 2, po_radius,
                         0.45 * e.X.domain().injectivity_radius());
        Vec q = po_q.empty() ? p : parse_point(po_q);
        auto [img, tau] = pm.evaluate(q);
        pay["map"] = {{"q", vec_json(q)}, {"image", vec_json(img)}, {"tau", tau}};
      }
      if (!po_sweep.empty()) {
        Vec sw = parse_point(po_sweep);
        if (sw.size() != 3) fail(Errc::BadConfig, "--sweep wants t0,t1,count");
        std::vector<double> ts;
        int cnt = static_cast<int>(sw[2]);
        for (int k = 0; k < cnt; ++k)
          ts.push_back(sw[0] + (sw[1] - sw[0]) * k / std::max(1, cnt - 1));
        if (c_po.csv.empty()) fail(Errc::BadConfig, "--sweep needs --csv");
        write_lpf_sweep_csv(c_po.csv, e.X, p, ts);
      }
      ordered_json params{{"field", e.name}, {"p", po_p}, {"t", po_t}};
      std::ostringstream os;
      os << "logabsdet P_t = " << op.logabsdet;
      return emit(c_po, "poincare", params, true, pay, os.str());
    }

    if (*cmd_cm) {
      CatalogEntry e = load_field(c_cm);
      CatalogEntry e2;
      if (cm_catalog2.empty() && cm_config2.empty()) {
        if (!e.Y) fail(Errc::BadConfig, "entry has no companion; pass --field2-*");
        e2.name = e.name + "_companion";
        e2.X = *e.Y;
      } else {
        Common c2 = c_cm;
        c2.catalog = cm_catalog2;
        c2.config = cm_config2;
        e2 = load_field(c2);
      }
      std::vector<double> tg;
      {
        Vec tv = parse_point(cm_tgrid);
        for (Eigen::Index i = 0; i < tv.size(); ++i) tg.push_back(tv[i]);
      }
      CommutationReport rep = commutation_residual(e.X, e2.X, ensure_grid(e), tg, c_cm.tol);
      if (!c_cm.csv.empty())
        write_csv(c_cm.csv, {"max_bracket", "max_flow_residual"},
                  {{rep.max_bracket, rep.max_flow_residual}});
      ordered_json params{{"field", e.name}, {"field2", e2.X.name()}, {"tol", c_cm.tol}};
      std::ostringstream os;
      os << "bracket " << rep.max_bracket << ", flow " << rep.max_flow_residual;
      return emit(c_cm, "commute", params, rep.verdict, parse_payload(payload_json(rep)),
                  os.str());
    }

    if (*cmd_rf) {
      CatalogEntry e = load_field(c_rf);
      if (!e.Y) fail(Errc::BadConfig, "entry has no companion field");
      Vec p = parse_point(rf_p);
      double val = recover_f(e.X, *e.Y, p);
      bool ok = std::isnan(rf_expect) || std::abs(val - rf_expect) <= c_rf.tol;
      ordered_json pay;
      pay["value"] = val;
      if (!std::isnan(rf_expect)) pay["expected"] = rf_expect;
      ordered_json params{{"field", e.name}, {"p", rf_p}};
      std::ostringstream os;
      os << "f(p) = " << val;
      return emit(c_rf, "recover-f", params, ok, pay, os.str());
    }

    if (*cmd_di) {
      CatalogEntry e = load_field(c_di);
      DistortionRecord rec =
          normal_distortion(e.X, parse_point(di_x), parse_point(di_y), di_N, 1e-10);
      if (!c_di.csv.empty()) write_distortion_csv(c_di.csv, rec);
      bool ok = rec.reached == di_N || !rec.error.empty();
      ordered_json params{{"field", e.name}, {"x", di_x}, {"y", di_y}, {"N", di_N}};
      std::ostringstream os;
      os << "reached n = " << rec.reached;
      if (rec.reached > 0) os << ", Delta_max = " << rec.delta[rec.reached - 1];
      return emit(c_di, "distortion", params, ok, parse_payload(payload_json(rec)),
                  os.str());
    }

    if (*cmd_und) {
      CatalogEntry e = load_field(c_und);
      Rng rng(c_und.seed);
      UndReport rep = und_probe(e.X, rng, und_pairs, und_K, und_N, e.wandering, und_offset);
      ordered_json params{
          {"field", e.name}, {"K", und_K}, {"N", und_N}, {"pairs", und_pairs}};
      std::ostringstream os;
      os << rep.achieved << "/" << rep.pairs.size() << " pairs exceeded K";
      return emit(c_und, "und", params, true, parse_payload(payload_json(rep)), os.str());
    }

    if (*cmd_se) {
      CatalogEntry e = load_field(c_se);
      Rng rng(c_se.seed);
      PairSampler sampler =
          se_sampler == "offset" ? PairSampler::Offset : PairSampler::IndependentUniform;
      SeparatingReport rep = separating_probe(e.X, se_eps, se_T, se_pairs, rng, sampler,
                                              se_offset, 1e-8, e.wandering);
      bool ok = se_expect == "any"       ? true
                : se_expect == "witness" ? rep.witnesses >= 1
                                         : rep.witnesses == 0;
      ordered_json params{{"field", e.name},   {"eps", se_eps},
                          {"T", se_T},         {"pairs", se_pairs},
                          {"sampler", se_sampler}, {"expect", se_expect}};
      std::ostringstream os;
      os << rep.witnesses << " non-separating witnesses";
      return emit(c_se, "separating", params, ok, parse_payload(payload_json(rep)),
                  os.str());
    }

    if (*cmd_ki) {
      CatalogEntry e = load_field(c_ki);
      Rng rng(c_ki.seed);
      std::vector<double> dg;
      {
        Vec dv = parse_point(ki_deltas);
        for (Eigen::Index i = 0; i < dv.size(); ++i) dg.push_back(dv[i]);
      }
      // offset pairs drawn through the admissible-region sampler
      SeparatingReport seeds = separating_probe(e.X, 1e-9, 0.01, ki_pairs, rng,
                                                PairSampler::Offset, ki_offset, 1e-6,
                                                e.wandering);
      std::vector<std::pair<Vec, Vec>> pairs;
      for (const auto& w : seeds.results) pairs.push_back({w.x, w.y});
      KinematicReport rep = kinematic_probe(e.X, ki_eps, dg, ki_T, pairs, 1e-9, c_ki.seed);
      ordered_json params{
          {"field", e.name}, {"eps", ki_eps}, {"T", ki_T}, {"pairs", ki_pairs}};
      std::ostringstream os;
      os << rep.failures << " kinematic-expansivity failures";
      return emit(c_ki, "kinematic", params, true, parse_payload(payload_json(rep)),
                  os.str());
    }

    if (*cmd_gd) {
      CatalogEntry e = load_field(c_gd);
      if (!e.f) fail(Errc::BadConfig, "entry carries no invariant scalar field");
      Vec sigma;
      if (!gd_sigma.empty()) {
        sigma = parse_point(gd_sigma);
      } else {
        const auto* s = e.X.find_singularity("saddle");
        if (!s) fail(Errc::BadConfig, "entry lists no saddle; pass --sigma");
        sigma = s->location;
      }
      std::vector<double> radii;
      {
        Vec rv = parse_point(gd_radii);
        for (Eigen::Index i = 0; i < rv.size(); ++i) radii.push_back(rv[i]);
      }
      GradientDecayReport rep = gradient_decay_probe(*e.f, e.X, sigma, radii);
      if (!c_gd.csv.empty()) {
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < radii.size(); ++i)
          rows.push_back({radii[i], rep.sup_grad[i]});
        write_csv(c_gd.csv, {"radius", "sup_grad"}, rows);
      }
      ordered_json params{{"field", e.name}, {"radii", gd_radii}};
      std::ostringstream os;
      os << "series tail " << rep.sup_grad.back() << (rep.monotone ? " (monotone)" : "");
      return emit(c_gd, "gradient-decay", params, rep.monotone,
                  parse_payload(payload_json(rep)), os.str());
    }

    if (*cmd_bi) {
      auto tau = [bi_amp](double x) { return 1.0 + bi_amp * std::cos(2 * M_PI * x); };
      BirkhoffDeviationReport rep = birkhoff_deviation(tau, bi_theta, bi_K, bi_grid);
      if (!c_bi.csv.empty()) write_deviation_csv(c_bi.csv, rep);
      bool ok = rep.deviation.size() < 2 || rep.deviation.back() < rep.deviation.front();
      ordered_json params{{"rotation", bi_theta}, {"amplitude", bi_amp}, {"K", bi_K}};
      std::ostringstream os;
      os << "deviation " << rep.deviation.front() << " -> " << rep.deviation.back();
      return emit(c_bi, "birkhoff", params, ok, parse_payload(payload_json(rep)), os.str());
    }

    if (*cmd_ce) {
      CatalogEntry e = load_field(c_ce);
      std::vector<double> tg = {-1.0, -0.5, -0.25, 0.25, 0.5, 1.0};
      BoundednessCertificate cert = boundedness_certificate(e.X, ensure_grid(e), tg);
      std::vector<Vec> calib =
          e.calibration_points.empty() ? ensure_grid(e) : e.calibration_points;
      Calibration cal = calibrate(e.X, cert, calib, ce_band_n, 12, c_ce.seed);
      ordered_json pay = parse_payload(cert.json());
      ordered_json params{{"field", e.name}, {"band_n", ce_band_n}};
      std::ostringstream os;
      os << "C = " << cert.C << ", alpha = " << cal.alpha << ", beta = " << cal.beta;
      return emit(c_ce, "certify", params, true, pay, os.str());
    }

    if (*cmd_pr) {
      CatalogEntry e = load_field(c_pr);
      Vec p = parse_point(pr_p);
      double alpha = 0.25;
      double radius = pr_radius;
      if (radius <= 0) {
        std::vector<double> tg = {-1.0, -0.5, 0.5, 1.0};
        BoundednessCertificate cert = boundedness_certificate(e.X, ensure_grid(e), tg);
        std::vector<Vec> calib =
            e.calibration_points.empty() ? ensure_grid(e) : e.calibration_points;
        Calibration cal = calibrate(e.X, cert, calib, 2, 10, c_pr.seed);
        alpha = cal.alpha;
        radius = cal.beta * e.X(p).norm() / std::pow(cert.C, pr_n0);
      }
      BaseOrbit base(e.X, p, -1.0 - alpha, pr_n0 + 1.0 + alpha);
      PerturbationBundle b = pr_identity
                                 ? identity_bundle(base, radius, pr_n0)
                                 : det_bump_bundle(base, radius, pr_n0, pr_stage, pr_lambda);
      Realization real = realize(e.X, p, radius, pr_n0, b, BumpProfile{}, pr_eps, alpha);
      RealizeChecks rc = real.verify(std::max(10, 5 * pr_n0), c_pr.seed, 1e-6);
      if (!c_pr.csv.empty()) {
        // grid-sampled difference field over the tube chart: point, Y - X
        const int m = e.X.domain().dim() - 1;
        std::vector<std::string> header;
        for (int i = 1; i <= e.X.domain().dim(); ++i)
          header.push_back("x_" + std::to_string(i));
        for (int i = 1; i <= e.X.domain().dim(); ++i)
          header.push_back("d_" + std::to_string(i));
        std::vector<std::vector<double>> rows;
        for (double t = 0; t <= pr_n0 + 1e-9; t += pr_n0 / 24.0)
          for (double fr : {-0.8, -0.4, 0.0, 0.4, 0.8}) {
            Vec cc = Vec::Constant(m, fr * radius);
            Vec y = real.tube().source_point(cc);
            try {
              Vec q = e.X.domain().wrap(flow(e.X, y, t, 1e-10));
              Vec dv = real.field().difference(q);
              std::vector<double> row;
              for (int i = 0; i < q.size(); ++i) row.push_back(q[i]);
              for (int i = 0; i < dv.size(); ++i) row.push_back(dv[i]);
              rows.push_back(std::move(row));
            } catch (const Error&) {
              continue;
            }
          }
        write_csv(c_pr.csv, header, rows);
      }
      ordered_json pay;
      pay["n0"] = pr_n0;
      pay["radius"] = radius;
      pay["identity"] = pr_identity;
      {
        // bundle serialization: stage matrices and bump parameters
        ordered_json stages = ordered_json::array();
        for (const auto& st : real.lifted().bundle().gtilde) {
          ordered_json sj;
          ordered_json am = ordered_json::array();
          for (int i = 0; i < st.A.rows(); ++i)
            for (int j = 0; j < st.A.cols(); ++j) am.push_back(st.A(i, j));
          sj["A"] = am;
          if (st.bump) {
            sj["bump"] = {{"center", vec_json(st.bump->center())},
                          {"r_in", st.bump->r_in()},
                          {"r_out", st.bump->r_out()},
                          {"lambda", st.bump->lambda()}};
          }
          stages.push_back(std::move(sj));
        }
        pay["bundle"] = {{"u_radius", real.lifted().bundle().u_radius},
                         {"n0", real.lifted().bundle().n0},
                         {"delta1", real.lifted().bundle().delta1},
                         {"stages", std::move(stages)}};
      }
      pay["max_diff_outside"] = rc.max_diff_outside;
      pay["max_poincare_mismatch"] = rc.max_poincare_mismatch;
      pay["d_c1_xy"] = rc.d_c1_xy;
      pay["tau"] = {rc.tau_min, rc.tau_max};
      pay["tau_in_band"] = rc.tau_in_band;
      ordered_json params{{"field", e.name},
                          {"p", pr_p},
                          {"n0", pr_n0},
                          {"identity", pr_identity},
                          {"eps", pr_eps}};
      return emit(c_pr, "perturb-realize", params, rc.pass, pay, rc.detail);
    }

    if (*cmd_dp) {
      CatalogEntry e = load_field(c_dp);
      DistortPairOptions o;
      o.eta = dp_eta;
      o.delta_samples = dp_samples;
      o.seed = c_dp.seed;
      o.step_cap = dp_cap;
      o.certificate_grid = e.grid;
      o.calibration_points = e.calibration_points;
      DistortPairReport rep = distort_pair(e.X, parse_point(dp_p), dp_delta,
                                           parse_point(dp_x), dp_K, dp_eps, o);
      ordered_json pay;
      pay["n0"] = rep.n0;
      pay["C"] = rep.C;
      pay["alpha"] = rep.alpha;
      pay["beta"] = rep.beta;
      pay["u_radius"] = rep.u_radius;
      pay["support_in_tube"] = rep.support_in_tube;
      pay["d_c1_xy"] = rep.d_c1_xy;
      pay["per_step_c1"] = rep.per_step_c1;
      pay["delta_certificate"] = rep.delta_cert;
      pay["per_step_c0"] = rep.per_step_c0;
      pay["distortion_achieved"] = rep.distortion_achieved;
      pay["distortion_total"] = rep.distortion_total;
      pay["min_max_distortion"] = rep.min_max_distortion;
      ordered_json params{{"field", e.name}, {"p", dp_p},     {"x", dp_x},
                          {"K", dp_K},       {"eps", dp_eps}, {"eta", dp_eta}};
      return emit(c_dp, "distort-pair", params, rep.pass, pay, rep.detail);
    }

    if (*cmd_cl) {
      ordered_json pay = ordered_json::array();
      bool all_ok = true;
      for (const auto& name : catalog_names()) {
        CatalogOptions copts;
        copts.theta = c_cl.theta;
        CatalogEntry e = catalog_get(name, copts);
        ordered_json item;
        item["name"] = name;
        item["domain"] = e.X.domain().describe();
        item["has_companion"] = e.Y.has_value();
        item["has_invariant"] = e.f.has_value();
        ordered_json tags;
        for (const auto& [k, v] : e.tags) tags[k] = v;
        item["tags"] = tags;
        item["provenance"] = e.provenance;
        if (cl_verify) {
          auto fails = catalog_verify(name, copts);
          item["verified"] = fails.empty();
          if (!fails.empty()) {
            all_ok = false;
            item["failures"] = fails;
          }
        }
        pay.push_back(std::move(item));
      }
      ordered_json params{{"verify", cl_verify}};
      std::ostringstream os;
      os << catalog_names().size() << " entries" << (cl_verify ? " (verified)" : "");
      return emit(c_cl, "catalog-list", params, all_ok, pay, os.str());
    }
  } catch (const Error& e) {
    nlohmann::json err{{"error", errc_name(e.code())}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    nlohmann::json err{{"error", "Unexpected"}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 1;
}
