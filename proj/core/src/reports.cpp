#include "centra/reports.hpp"

#include <fstream>
#include <iomanip>

#include <json.hpp>

namespace centra {

using ordered_json = nlohmann::ordered_json;

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) fail(Errc::BadConfig, "cannot open output file " + path);
  os << std::setprecision(17);
  return os;
}

ordered_json vec_json(const Vec& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

}  // namespace

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream os = open_out(path);
  for (std::size_t i = 0; i < header.size(); ++i)
    os << header[i] << (i + 1 < header.size() ? "," : "\n");
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      os << row[i] << (i + 1 < row.size() ? "," : "\n");
  }
}

void write_orbit_csv(const std::string& path, const VectorFieldSpec& X, const Vec& p,
                     double t0, double t1, int samples, bool with_variational,
                     double tol) {
  const int d = X.domain().dim();
  std::vector<std::string> header = {"t"};
  for (int i = 1; i <= d; ++i) header.push_back("x_" + std::to_string(i));
  if (with_variational)
    for (int i = 1; i <= d; ++i)
      for (int j = 1; j <= d; ++j)
        header.push_back("dX_" + std::to_string(i) + "_" + std::to_string(j));

  IntegrateOptions opts;
  opts.tol = tol;
  std::vector<std::vector<double>> rows;
  if (with_variational) {
    FlowWithVariational fv = variational_orbit(X, p, t0, t1, opts);
    for (int k = 0; k <= samples; ++k) {
      double t = t0 + (t1 - t0) * k / double(samples);
      Vec x = X.domain().wrap(fv.state(t));
      Mat W = fv.matrix(t);
      std::vector<double> row = {t};
      for (int i = 0; i < d; ++i) row.push_back(x[i]);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) row.push_back(W(i, j));
      rows.push_back(std::move(row));
    }
  } else {
    OrbitSegment seg = flow_orbit(X, p, t0, t1, opts);
    for (int k = 0; k <= samples; ++k) {
      double t = t0 + (t1 - t0) * k / double(samples);
      Vec x = X.domain().wrap(seg.eval(t));
      std::vector<double> row = {t};
      for (int i = 0; i < d; ++i) row.push_back(x[i]);
      rows.push_back(std::move(row));
    }
  }
  write_csv(path, header, rows);
}

void write_lpf_sweep_csv(const std::string& path, const VectorFieldSpec& X, const Vec& p,
                         const std::vector<double>& t_values, double tol) {
  const int d = X.domain().dim();
  std::vector<std::string> header;
  for (int i = 1; i <= d; ++i) header.push_back("p_" + std::to_string(i));
  header.push_back("t");
  header.push_back("logabsdet");
  std::vector<std::vector<double>> rows;
  for (double t : t_values) {
    LinearPoincareOp op = linear_poincare(X, p, t, tol);
    std::vector<double> row;
    for (int i = 0; i < d; ++i) row.push_back(p[i]);
    row.push_back(t);
    row.push_back(op.logabsdet);
    rows.push_back(std::move(row));
  }
  write_csv(path, header, rows);
}

void write_band_csv(const std::string& path, const BandReport& rep) {
  std::vector<std::string> header;
  std::size_t m = rep.samples.empty() ? 1 : rep.samples.front().coords.size();
  for (std::size_t i = 1; i <= m; ++i) header.push_back("q_" + std::to_string(i));
  header.insert(header.end(), {"tau", "band_low", "band_high", "pass"});
  std::vector<std::vector<double>> rows;
  for (const auto& s : rep.samples) {
    std::vector<double> row;
    for (Eigen::Index i = 0; i < s.coords.size(); ++i) row.push_back(s.coords[i]);
    row.push_back(s.tau);
    row.push_back(rep.band_lo);
    row.push_back(rep.band_hi);
    row.push_back(s.pass ? 1.0 : 0.0);
    rows.push_back(std::move(row));
  }
  write_csv(path, header, rows);
}

void write_distortion_csv(const std::string& path, const DistortionRecord& rec) {
  std::vector<std::vector<double>> rows;
  for (int n = 0; n < rec.reached; ++n)
    rows.push_back({double(n + 1), rec.delta[n], rec.logdet_x[n], rec.logdet_y[n]});
  write_csv(path, {"n", "delta", "logdet_x", "logdet_y"}, rows);
}

void write_deviation_csv(const std::string& path, const BirkhoffDeviationReport& rep) {
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < rep.denominators.size(); ++i)
    rows.push_back({double(rep.denominators[i]), rep.deviation[i]});
  write_csv(path, {"qn", "deviation"}, rows);
}

std::string payload_json(const CommutationReport& r) {
  ordered_json j;
  j["grid"] = r.grid_description;
  j["max_bracket_residual"] = r.max_bracket;
  j["max_flow_residual"] = r.max_flow_residual;
  j["tolerance"] = r.tolerance;
  j["errors"] = r.errors;
  j["verdict"] = r.verdict;
  return j.dump();
}

std::string payload_json(const DistortionRecord& r) {
  ordered_json j;
  j["x"] = vec_json(r.x);
  j["y"] = vec_json(r.y);
  j["N"] = r.N;
  j["reached"] = r.reached;
  j["delta"] = r.delta;
  j["logdet_x"] = r.logdet_x;
  j["logdet_y"] = r.logdet_y;
  if (!r.error.empty()) j["error"] = r.error;
  return j.dump();
}

std::string payload_json(const SeparatingReport& r) {
  ordered_json j;
  j["eps"] = r.eps;
  j["T"] = r.T;
  j["sampler"] = r.sampler;
  j["witnesses"] = r.witnesses;
  ordered_json arr = ordered_json::array();
  for (const auto& w : r.results) {
    ordered_json e;
    e["x"] = vec_json(w.x);
    e["y"] = vec_json(w.y);
    e["max_distance"] = w.max_distance;
    e["same_orbit"] = w.same_orbit;
    if (w.same_orbit) e["reparam_s"] = w.reparam_s;
    e["non_separating"] = w.non_separating;
    if (w.non_separating) e["trapped_certified"] = w.trapped_certified;
    if (!w.error.empty()) e["error"] = w.error;
    arr.push_back(std::move(e));
  }
  j["pairs"] = std::move(arr);
  return j.dump();
}

std::string payload_json(const KinematicReport& r) {
  ordered_json j;
  j["eps"] = r.eps;
  j["T"] = r.T;
  j["delta_grid"] = r.delta_grid;
  j["failures"] = r.failures;
  ordered_json arr = ordered_json::array();
  for (const auto& c : r.cases) {
    ordered_json e;
    e["x"] = vec_json(c.x);
    e["y"] = vec_json(c.y);
    e["max_distance"] = c.max_distance;
    e["stayed_close"] = c.stayed_close;
    e["same_orbit"] = c.same_orbit;
    e["reparam_s"] = c.reparam_s;
    e["failure"] = c.failure;
    if (!c.reason.empty()) e["reason"] = c.reason;
    arr.push_back(std::move(e));
  }
  j["cases"] = std::move(arr);
  return j.dump();
}

std::string payload_json(const UndReport& r) {
  ordered_json j;
  j["K"] = r.K;
  j["N"] = r.N;
  j["achieved"] = r.achieved;
  ordered_json arr = ordered_json::array();
  for (const auto& p : r.pairs) {
    ordered_json e;
    e["x"] = vec_json(p.x);
    e["y"] = vec_json(p.y);
    e["max_delta"] = p.max_delta;
    if (p.min_n)
      e["min_n"] = *p.min_n;
    else
      e["min_n"] = nullptr;
    if (!p.error.empty()) e["error"] = p.error;
    arr.push_back(std::move(e));
  }
  j["pairs"] = std::move(arr);
  return j.dump();
}

std::string payload_json(const GradientDecayReport& r) {
  ordered_json j;
  j["sigma"] = vec_json(r.sigma);
  j["radii"] = r.radii;
  j["sup_grad"] = r.sup_grad;
  j["monotone"] = r.monotone;
  return j.dump();
}

std::string payload_json(const BirkhoffDeviationReport& r) {
  ordered_json j;
  j["theta"] = r.theta;
  j["T"] = r.T;
  j["denominators"] = r.denominators;
  j["deviation"] = r.deviation;
  j["grid_points"] = r.grid_points;
  return j.dump();
}

std::string payload_json(const BandReport& r) {
  ordered_json j;
  j["n"] = r.n;
  j["alpha"] = r.alpha;
  j["radius"] = r.radius;
  j["band"] = {r.band_lo, r.band_hi};
  j["violations"] = r.violations;
  j["errors"] = r.errors;
  j["pass"] = r.pass;
  ordered_json arr = ordered_json::array();
  for (const auto& s : r.samples) {
    ordered_json e;
    e["q"] = vec_json(s.coords);
    e["tau"] = s.tau;
    e["pass"] = s.pass;
    if (!s.error.empty()) e["error"] = s.error;
    arr.push_back(std::move(e));
  }
  j["samples"] = std::move(arr);
  return j.dump();
}

}  // namespace centra
