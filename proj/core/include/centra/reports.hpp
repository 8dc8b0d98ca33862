#pragma once

#include <string>
#include <vector>

#include "centra/centralizer.hpp"
#include "centra/poincare.hpp"

namespace centra {

// CSV writers for the declared emitters. Columns are fixed by the schemas
// below; values print with 17 significant digits.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

// Orbit dump: t, x_1..x_d and optionally the d^2 variational entries
// (row-major dX_i/dx_j).
void write_orbit_csv(const std::string& path, const VectorFieldSpec& X, const Vec& p,
                     double t0, double t1, int samples, bool with_variational,
                     double tol = 1e-10);

// Linear-Poincare sweep: p_1..p_d, t, logabsdet.
void write_lpf_sweep_csv(const std::string& path, const VectorFieldSpec& X, const Vec& p,
                         const std::vector<double>& t_values, double tol = 1e-10);

// Hitting-time report: q_1..q_{d-1} (disk coords), tau, band_low, band_high, pass.
void write_band_csv(const std::string& path, const BandReport& rep);

// Delta-series: n, delta, logdet_x, logdet_y.
void write_distortion_csv(const std::string& path, const DistortionRecord& rec);

// Deviation series: qn, deviation.
void write_deviation_csv(const std::string& path, const BirkhoffDeviationReport& rep);

// Payload fragments as JSON text (stable key order, 17-digit doubles).
std::string payload_json(const CommutationReport& r);
std::string payload_json(const DistortionRecord& r);
std::string payload_json(const SeparatingReport& r);
std::string payload_json(const KinematicReport& r);
std::string payload_json(const UndReport& r);
std::string payload_json(const GradientDecayReport& r);
std::string payload_json(const BirkhoffDeviationReport& r);
std::string payload_json(const BandReport& r);

}  // namespace centra
