#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "centra/domain.hpp"
#include "centra/types.hpp"

namespace centra {

// Evaluatable vector field X(p) with Jacobian DX(p) on a flat chart.
// The Jacobian is analytic when supplied, otherwise central differences
// with step h = 1e-5 * (1 + |p|).
class VectorFieldSpec {
 public:
  using EvalFn = std::function<Vec(const Vec&)>;
  using JacFn = std::function<Mat(const Vec&)>;

  struct Singularity {
    Vec location;
    std::string kind;  // sink | source | saddle | none
  };

  VectorFieldSpec() = default;
  VectorFieldSpec(DomainChart domain, EvalFn eval, JacFn jac = nullptr,
                  std::vector<Singularity> zeros = {}, std::string name = "field");

  const DomainChart& domain() const { return domain_; }
  const std::string& name() const { return name_; }

  Vec operator()(const Vec& p) const { return eval_(p); }
  Vec eval(const Vec& p) const { return eval_(p); }
  Mat jacobian(const Vec& p) const;
  bool has_analytic_jacobian() const { return static_cast<bool>(jac_); }

  // Sampled sup |X| over a deterministic domain grid; fixed at construction.
  double field_scale() const { return field_scale_; }
  // Scale-free singularity threshold: |X(p)| < 1e-9 * field_scale.
  double zero_tolerance() const { return 1e-9 * field_scale_; }
  bool is_singular(const Vec& p) const { return eval_(p).norm() < zero_tolerance(); }

  const std::vector<Singularity>& singularities() const { return zeros_; }
  // First listed singularity of the given kind, if any.
  const Singularity* find_singularity(const std::string& kind) const;

 private:
  DomainChart domain_;
  EvalFn eval_;
  JacFn jac_;
  std::vector<Singularity> zeros_;
  std::string name_;
  double field_scale_ = 1.0;
};

// Scalar field with gradient (central differences when not supplied).
struct ScalarFieldSpec {
  std::function<double(const Vec&)> eval;
  std::function<Vec(const Vec&)> grad;
  std::string name = "f";

  double operator()(const Vec& p) const { return eval(p); }
  Vec gradient(const Vec& p) const;
};

// Central-difference step rule shared by the Jacobian fallbacks.
inline double fd_step(const Vec& p) { return 1e-5 * (1.0 + p.norm()); }

}  // namespace centra
