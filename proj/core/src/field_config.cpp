#include "centra/field_config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace centra {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  auto e = s.find_last_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

std::vector<double> parse_doubles(const std::string& s, char sep) {
  std::vector<double> out;
  std::string tok;
  std::istringstream is(s);
  while (std::getline(is, tok, sep)) {
    tok = trim(tok);
    if (tok.empty()) continue;
    std::size_t pos = 0;
    double v = std::stod(tok, &pos);
    if (pos != tok.size()) fail(Errc::BadConfig, "bad numeric value '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

// Monomial sum: each term is "coef e1 e2 .. ed" (integer exponents).
struct Polynomial {
  struct Term {
    double coef;
    std::vector<int> exp;
  };
  std::vector<Term> terms;
  int dim = 0;

  double eval(const Vec& p) const {
    double s = 0;
    for (const auto& t : terms) {
      double m = t.coef;
      for (int i = 0; i < dim; ++i)
        for (int k = 0; k < t.exp[i]; ++k) m *= p[i];
      s += m;
    }
    return s;
  }
  double deval(const Vec& p, int j) const {
    double s = 0;
    for (const auto& t : terms) {
      if (t.exp[j] == 0) continue;
      double m = t.coef * t.exp[j];
      for (int i = 0; i < dim; ++i) {
        int e = t.exp[i] - (i == j ? 1 : 0);
        for (int k = 0; k < e; ++k) m *= p[i];
      }
      s += m;
    }
    return s;
  }
};

Polynomial parse_polynomial(const std::string& text, int dim) {
  Polynomial poly;
  poly.dim = dim;
  std::string term;
  std::istringstream is(text);
  while (std::getline(is, term, ';')) {
    term = trim(term);
    if (term.empty()) continue;
    std::istringstream ts(term);
    Polynomial::Term t;
    ts >> t.coef;
    if (!ts) fail(Errc::BadConfig, "bad monomial '" + term + "'");
    t.exp.resize(dim, 0);
    for (int i = 0; i < dim; ++i) {
      ts >> t.exp[i];
      if (!ts) fail(Errc::BadConfig, "monomial '" + term + "' needs " +
                                         std::to_string(dim) + " exponents");
      if (t.exp[i] < 0) fail(Errc::BadConfig, "negative exponent in '" + term + "'");
    }
    poly.terms.push_back(std::move(t));
  }
  if (poly.terms.empty()) fail(Errc::BadConfig, "empty polynomial component");
  return poly;
}

}  // namespace

bool ParsedConfig::has(const std::string& section, const std::string& key) const {
  auto it = sections.find(section);
  return it != sections.end() && it->second.count(key) > 0;
}

std::string ParsedConfig::get(const std::string& section, const std::string& key) const {
  auto it = sections.find(section);
  if (it == sections.end() || !it->second.count(key))
    fail(Errc::BadConfig, "missing config key [" + section + "] " + key);
  return it->second.at(key);
}

double ParsedConfig::get_double(const std::string& section,
                                const std::string& key) const {
  return parse_doubles(get(section, key), ',').at(0);
}

ParsedConfig parse_config_text(const std::string& text) {
  ParsedConfig cfg;
  std::istringstream is(text);
  std::string line, section = "";
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        fail(Errc::BadConfig, "bad section header at line " + std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(Errc::BadConfig, "expected key=value at line " + std::to_string(lineno));
    cfg.sections[section][trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return cfg;
}

ParsedConfig parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(Errc::BadConfig, "cannot read config file " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config_text(buf.str());
}

CatalogEntry field_from_config(const ParsedConfig& cfg, const CatalogOptions& opts) {
  if (cfg.has("field", "builtin")) return catalog_get(cfg.get("field", "builtin"), opts);

  std::string kind = cfg.get("domain", "kind");
  double R = cfg.has("domain", "radius") ? cfg.get_double("domain", "radius") : 0.5;
  DomainChart dom = DomainChart::box(Vec::Zero(2), Vec::Ones(2), 1);
  if (kind == "torus") {
    std::vector<double> per = parse_doubles(cfg.get("domain", "periods"), ',');
    dom = DomainChart::torus(Eigen::Map<Vec>(per.data(), per.size()), R);
  } else if (kind == "box") {
    std::vector<double> lo = parse_doubles(cfg.get("domain", "lower"), ',');
    std::vector<double> hi = parse_doubles(cfg.get("domain", "upper"), ',');
    dom = DomainChart::box(Eigen::Map<Vec>(lo.data(), lo.size()),
                           Eigen::Map<Vec>(hi.data(), hi.size()), R);
  } else if (kind == "annulus") {
    dom = DomainChart::annulus(cfg.get_double("domain", "a"),
                               cfg.get_double("domain", "b"), R);
  } else {
    fail(Errc::BadConfig, "unknown domain kind '" + kind + "'");
  }

  const int d = dom.dim();
  auto polys = std::make_shared<std::vector<Polynomial>>();
  for (int i = 1; i <= d; ++i)
    polys->push_back(parse_polynomial(cfg.get("field", "component_" + std::to_string(i)), d));

  auto eval = [polys, d](const Vec& p) {
    Vec v(d);
    for (int i = 0; i < d; ++i) v[i] = (*polys)[i].eval(p);
    return v;
  };
  auto jac = [polys, d](const Vec& p) {
    Mat J(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) J(i, j) = (*polys)[i].deval(p, j);
    return J;
  };
  CatalogEntry e;
  e.name = "config_polynomial";
  e.X = VectorFieldSpec(dom, eval, jac, {}, "config_polynomial");
  e.provenance = "polynomial field from config";
  return e;
}

}  // namespace centra
