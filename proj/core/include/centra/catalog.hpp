#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "centra/vector_field.hpp"

namespace centra {

// Registry entry: a domain, the field X, optionally a commuting companion Y
// and an invariant scalar f, plus the declared grids the diagnostics run on.
struct CatalogEntry {
  std::string name;
  VectorFieldSpec X;
  std::optional<VectorFieldSpec> Y;   // companion, commutes with X when present
  std::optional<ScalarFieldSpec> f;   // X-invariant scalar when present
  std::string provenance;

  std::map<std::string, bool> tags;   // separating / commuting / collinear / singular_fibers

  std::vector<Vec> grid;              // declared spatial grid for residual checks
  std::vector<Vec> calibration_points;  // base points for the band calibration
  // Wandering-region test for pair samplers (true = usable sample).
  std::function<bool(const Vec&)> wandering;
};

struct CatalogOptions {
  double theta = 0.5;       // inclination for torus_linear
  double suspension_theta = 0.6180339887498949;  // golden mean rotation number
  double roof_amplitude = 0.1;                   // roof 1 + A cos(2 pi x)
};

CatalogEntry catalog_get(const std::string& name, const CatalogOptions& opts = {});
std::vector<std::string> catalog_names();

// Runs each entry's declared-tag checks; returns human-readable failures.
std::vector<std::string> catalog_verify(const std::string& name,
                                        const CatalogOptions& opts = {});

}  // namespace centra
