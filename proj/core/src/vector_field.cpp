#include "centra/vector_field.hpp"

#include <cmath>

namespace centra {

namespace {

// Deterministic probe grid used to estimate sup |X| for the zero tolerance.
std::vector<Vec> probe_grid(const DomainChart& dom) {
  std::vector<Vec> pts;
  const int n = 6;
  if (dom.kind() == ChartKind::Annulus) {
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j < 2 * n; ++j) {
        double r = dom.annulus_inner() +
                   (dom.annulus_outer() - dom.annulus_inner()) * i / double(n);
        double th = 2 * M_PI * j / double(2 * n);
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
    lo = dom.lower();
    hi = dom.upper();
  }
  int d = dom.dim();
  std::vector<int> idx(d, 0);
  while (true) {
    Vec p(d);
    for (int k = 0; k < d; ++k) p[k] = lo[k] + (hi[k] - lo[k]) * (idx[k] + 0.5) / double(n);
    pts.push_back(p);
    int k = 0;
    while (k < d && ++idx[k] == n) idx[k++] = 0;
    if (k == d) break;
  }
  return pts;
}

}  // namespace

VectorFieldSpec::VectorFieldSpec(DomainChart domain, EvalFn eval, JacFn jac,
                                 std::vector<Singularity> zeros, std::string name)
    : domain_(std::move(domain)),
      eval_(std::move(eval)),
      jac_(std::move(jac)),
      zeros_(std::move(zeros)),
      name_(std::move(name)) {
  double sup = 0;
  for (const Vec& p : probe_grid(domain_)) sup = std::max(sup, eval_(p).norm());
  field_scale_ = sup > 0 ? sup : 1.0;
}

Mat VectorFieldSpec::jacobian(const Vec& p) const {
  if (jac_) return jac_(p);
  const int d = static_cast<int>(p.size());
  const double h = fd_step(p);
  Mat J(d, d);
  Vec e = Vec::Zero(d);
  for (int j = 0; j < d; ++j) {
    e[j] = h;
    Vec fp = eval_(p + e);
    Vec fm = eval_(p - e);
    e[j] = 0;
    if (!fp.allFinite() || !fm.allFinite())
      fail(Errc::JacobianUnavailable, "finite-difference Jacobian hit non-finite values");
    J.col(j) = (fp - fm) / (2 * h);
  }
  return J;
}

const VectorFieldSpec::Singularity* VectorFieldSpec::find_singularity(
    const std::string& kind) const {
  for (const auto& s : zeros_)
    if (s.kind == kind) return &s;
  return nullptr;
}

Vec ScalarFieldSpec::gradient(const Vec& p) const {
  if (grad) return grad(p);
  const int d = static_cast<int>(p.size());
  const double h = fd_step(p);
  Vec g(d);
  Vec e = Vec::Zero(d);
  for (int j = 0; j < d; ++j) {
    e[j] = h;
    g[j] = (eval(p + e) - eval(p - e)) / (2 * h);
    e[j] = 0;
  }
  return g;
}

}  // namespace centra
