#pragma once

#include <Eigen/Core>
#include <string>

#include "centra/types.hpp"

namespace centra {

enum class ChartKind { Torus, Box, Annulus };

// Flat chart domains: tori (per-axis periods), euclidean boxes and planar
// annuli. The exponential map at p is v |-> p + v, wrapped on torus axes,
// injective for |v| < injectivity_radius().
class DomainChart {
 public:
  DomainChart() = default;  // empty chart; assign from a factory before use

  static DomainChart torus(Vec periods, double inj_radius);
  static DomainChart box(Vec lower, Vec upper, double inj_radius);
  static DomainChart annulus(double a, double b, double inj_radius);

  ChartKind kind() const { return kind_; }
  int dim() const { return dim_; }
  double injectivity_radius() const { return inj_radius_; }

  const Vec& periods() const { return periods_; }
  const Vec& lower() const { return lower_; }
  const Vec& upper() const { return upper_; }
  double annulus_inner() const { return a_; }
  double annulus_outer() const { return b_; }

  // Representative in the fundamental domain (identity off torus axes).
  Vec wrap(const Vec& p) const;
  // Wrap and report integer winding counts per torus axis.
  Vec wrap(const Vec& p, Eigen::VectorXi& winding) const;

  // Shortest displacement q - p, wrapped per torus axis to [-T/2, T/2).
  Vec displacement(const Vec& p, const Vec& q) const;
  double distance(const Vec& p, const Vec& q) const { return displacement(p, q).norm(); }

  Vec exp(const Vec& p, const Vec& v) const { return wrap(p + v); }

  bool contains(const Vec& p) const;

  std::string describe() const;

 private:
  ChartKind kind_ = ChartKind::Box;
  int dim_ = 0;
  double inj_radius_ = 0;
  Vec periods_, lower_, upper_;
  double a_ = 0, b_ = 0;
};

}  // namespace centra
