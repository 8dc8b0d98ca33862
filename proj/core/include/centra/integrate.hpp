#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "centra/vector_field.hpp"

namespace centra {

struct IntegrateOptions {
  double tol = 1e-10;        // local error tolerance (absolute and relative)
  double max_step = std::numeric_limits<double>::infinity();
  long max_steps = 4'000'000;
  bool check_domain = true;  // raise DomainExit when a box trajectory leaves
};

using Rhs = std::function<void(double, const Vec&, Vec&)>;

// One accepted Dormand-Prince step with its quartic interpolant.
struct DenseStep {
  double t0 = 0, t1 = 0;
  Vec c1, c2, c3, c4, c5;  // Hairer's rcont coefficients

  Vec eval(double t) const {
    double h = t1 - t0;
    double th = (t - t0) / h;
    double th1 = 1.0 - th;
    return c1 + th * (c2 + th1 * (c3 + th * (c4 + th1 * c5)));
  }
};

// Adaptive DOPRI5(4) stepper; integrates toward t_end one accepted step at a
// time and exposes the dense interpolant of the last step.
class Dopri5Stepper {
 public:
  Dopri5Stepper(Rhs rhs, Vec y0, double t0, double t_end, IntegrateOptions opts,
                const DomainChart* domain = nullptr, int position_dim = 0);

  bool done() const { return done_; }
  bool step();  // advance one accepted step; false once t_end is reached

  double t() const { return t_; }
  const Vec& y() const { return y_; }
  const DenseStep& last() const { return last_; }

 private:
  Rhs rhs_;
  Vec y_;
  double t_, t_end_, dir_, h_;
  IntegrateOptions opts_;
  const DomainChart* domain_;
  int pos_dim_;
  bool done_ = false;
  long n_steps_ = 0;
  Vec k1_, k2_, k3_, k4_, k5_, k6_, k7_, y_new_, y_err_, y_stage_;
  DenseStep last_;

  double initial_step() const;
  void check_domain(const Vec& y, double t) const;
};

// Dense-output trajectory over [t0, t1] (t1 < t0 integrates backward).
// States are stored unwrapped; wrap through the domain chart when needed.
class OrbitSegment {
 public:
  OrbitSegment() = default;
  OrbitSegment(std::vector<DenseStep> steps, double t0, double t1)
      : steps_(std::move(steps)), t0_(t0), t1_(t1) {}

  double t0() const { return t0_; }
  double t1() const { return t1_; }
  bool covers(double t) const;
  Vec eval(double t) const;
  const std::vector<DenseStep>& steps() const { return steps_; }

 private:
  std::vector<DenseStep> steps_;
  double t0_ = 0, t1_ = 0;
};

OrbitSegment integrate_dense(const Rhs& rhs, const Vec& y0, double t0, double t1,
                             const IntegrateOptions& opts,
                             const DomainChart* domain = nullptr, int position_dim = 0);

// ---- geometry-flow operations -------------------------------------------

Rhs field_rhs(const VectorFieldSpec& X);
// Augmented state [x; vec(W)] with dW/dt = DX(x) W (variational equation).
Rhs augmented_rhs(const VectorFieldSpec& X);

Vec flow(const VectorFieldSpec& X, const Vec& p, double t, double tol = 1e-10);
OrbitSegment flow_orbit(const VectorFieldSpec& X, const Vec& p, double t0, double t1,
                        const IntegrateOptions& opts = {});

Mat variational(const VectorFieldSpec& X, const Vec& p, double t, double tol = 1e-10);

// Trajectory and tangent flow co-integrated in one augmented segment.
class FlowWithVariational {
 public:
  FlowWithVariational() = default;
  FlowWithVariational(OrbitSegment seg, int dim) : seg_(std::move(seg)), dim_(dim) {}

  double t0() const { return seg_.t0(); }
  double t1() const { return seg_.t1(); }
  bool covers(double t) const { return seg_.covers(t); }
  Vec state(double t) const { return seg_.eval(t).head(dim_); }
  Mat matrix(double t) const;
  const OrbitSegment& segment() const { return seg_; }
  int dim() const { return dim_; }

 private:
  OrbitSegment seg_;
  int dim_ = 0;
};

FlowWithVariational variational_orbit(const VectorFieldSpec& X, const Vec& p, double t0,
                                      double t1, const IntegrateOptions& opts = {});

// [X, Y](p) = DY(p) X(p) - DX(p) Y(p).
Vec lie_bracket(const VectorFieldSpec& X, const VectorFieldSpec& Y, const Vec& p);

}  // namespace centra
