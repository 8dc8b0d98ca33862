#include "centra/domain.hpp"

#include <cmath>
#include <sstream>

namespace centra {

DomainChart DomainChart::torus(Vec periods, double inj_radius) {
  if (periods.size() < 2) fail(Errc::BadConfig, "torus dimension must be >= 2");
  for (int i = 0; i < periods.size(); ++i)
    if (!(periods[i] > 0)) fail(Errc::BadConfig, "torus periods must be positive");
  if (!(inj_radius > 0)) fail(Errc::BadConfig, "injectivity radius must be positive");
  DomainChart d;
  d.kind_ = ChartKind::Torus;
  d.dim_ = static_cast<int>(periods.size());
  d.periods_ = std::move(periods);
  d.inj_radius_ = inj_radius;
  return d;
}

DomainChart DomainChart::box(Vec lower, Vec upper, double inj_radius) {
  if (lower.size() != upper.size() || lower.size() < 2)
    fail(Errc::BadConfig, "box corners must agree in dimension >= 2");
  for (int i = 0; i < lower.size(); ++i)
    if (!(lower[i] < upper[i])) fail(Errc::BadConfig, "box requires lower < upper per axis");
  if (!(inj_radius > 0)) fail(Errc::BadConfig, "injectivity radius must be positive");
  DomainChart d;
  d.kind_ = ChartKind::Box;
  d.dim_ = static_cast<int>(lower.size());
  d.lower_ = std::move(lower);
  d.upper_ = std::move(upper);
  d.inj_radius_ = inj_radius;
  return d;
}

DomainChart DomainChart::annulus(double a, double b, double inj_radius) {
  if (!(0 < a && a < b)) fail(Errc::BadConfig, "annulus requires 0 < a < b");
  if (!(inj_radius > 0)) fail(Errc::BadConfig, "injectivity radius must be positive");
  DomainChart d;
  d.kind_ = ChartKind::Annulus;
  d.dim_ = 2;
  d.a_ = a;
  d.b_ = b;
  d.inj_radius_ = inj_radius;
  return d;
}

Vec DomainChart::wrap(const Vec& p) const {
  if (kind_ != ChartKind::Torus) return p;
  Vec q = p;
  for (int i = 0; i < dim_; ++i) {
    q[i] = std::fmod(q[i], periods_[i]);
    if (q[i] < 0) q[i] += periods_[i];
  }
  return q;
}

Vec DomainChart::wrap(const Vec& p, Eigen::VectorXi& winding) const {
  winding = Eigen::VectorXi::Zero(dim_);
  if (kind_ != ChartKind::Torus) return p;
  Vec q(dim_);
  for (int i = 0; i < dim_; ++i) {
    double w = std::floor(p[i] / periods_[i]);
    winding[i] = static_cast<int>(w);
    q[i] = p[i] - w * periods_[i];
  }
  return q;
}

Vec DomainChart::displacement(const Vec& p, const Vec& q) const {
  Vec d = q - p;
  if (kind_ == ChartKind::Torus) {
    for (int i = 0; i < dim_; ++i) {
      double T = periods_[i];
      d[i] = std::fmod(d[i], T);
      if (d[i] >= T / 2) d[i] -= T;
      if (d[i] < -T / 2) d[i] += T;
    }
  }
  return d;
}

bool DomainChart::contains(const Vec& p) const {
  switch (kind_) {
    case ChartKind::Torus:
      return true;
    case ChartKind::Box:
      for (int i = 0; i < dim_; ++i)
        if (p[i] < lower_[i] || p[i] > upper_[i]) return false;
      return true;
    case ChartKind::Annulus: {
      double r = p.norm();
      return r >= a_ && r <= b_;
    }
  }
  return false;
}

std::string DomainChart::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case ChartKind::Torus:
      os << "torus(periods=" << periods_.transpose() << ")";
      break;
    case ChartKind::Box:
      os << "box(lower=" << lower_.transpose() << ", upper=" << upper_.transpose() << ")";
      break;
    case ChartKind::Annulus:
      os << "annulus(a=" << a_ << ", b=" << b_ << ")";
      break;
  }
  os << " d=" << dim_ << " R=" << inj_radius_;
  return os.str();
}

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::DomainExit: return "DomainExit";
    case Errc::StepFailure: return "StepFailure";
    case Errc::SingularPoint: return "SingularPoint";
    case Errc::NoHit: return "NoHit";
    case Errc::Tangency: return "Tangency";
    case Errc::IllConditioned: return "IllConditioned";
    case Errc::CalibrationFailed: return "CalibrationFailed";
    case Errc::InfeasibleBudget: return "InfeasibleBudget";
    case Errc::InjectivityFailure: return "InjectivityFailure";
    case Errc::EpsilonExceeded: return "EpsilonExceeded";
    case Errc::HypothesisUnverified: return "HypothesisUnverified";
    case Errc::RationalRotation: return "RationalRotation";
    case Errc::InvarianceViolated: return "InvarianceViolated";
    case Errc::UnknownEntry: return "UnknownEntry";
    case Errc::JacobianUnavailable: return "JacobianUnavailable";
    case Errc::BadConfig: return "BadConfig";
  }
  return "UnknownError";
}

}  // namespace centra
