#pragma once

#include <span>
#include <vector>

#include "momentlab/lattice.hpp"
#include "momentlab/linalg.hpp"

namespace momentlab::moments {

/// Per-site spectral moments M_m = (1/N) sum_j (E_j - reference)^m.
/// values[m] holds M_m for m = 0..m_max, with values[0] == 1.
struct MomentSeries {
  Complex reference{};
  std::vector<Complex> values;
  int sites = 0;
  int linear_size = 0;
  int dimension = 1;

  int max_order() const { return static_cast<int>(values.size()) - 1; }
  Complex operator[](int m) const { return values.at(m); }
};

/// Thermodynamic per-site moments w_m (constant Laurent coefficients).
struct BulkMoments {
  std::vector<Complex> values;  // index m, values[0] == 1
  double amplitude_scale = 0.0;  // max |A_delta|, used for the validity threshold
  bool includes_onsite = false;

  int max_order() const { return static_cast<int>(values.size()) - 1; }
  Complex operator[](int m) const { return values.at(m); }
};

struct DeviationSeries {
  std::vector<double> relative;  // r(m, L), index m (entry 0 unused)
  std::vector<bool> valid;       // false where |w_m| <= eps_denom
  int linear_size = 0;
};

MomentSeries eigen_moments(const linalg::ComplexSpectrum& spectrum, Complex reference, int m_max);

/// Same series computed from traces of powers of H (the independent route).
MomentSeries trace_moments(const lattice::HamiltonianMatrix& h, Complex reference, int m_max);

/// w_m for m = 0..m_max. With include_onsite the generator carries the on-site
/// term, giving the non-central thermodynamic moments.
BulkMoments bulk_moments(const lattice::LatticeModel& model, int m_max, bool include_onsite = false);

/// eps_denom(m) = 1e-9 * (max |A_delta|)^m.
double denominator_threshold(const BulkMoments& bulk, int m);

DeviationSeries deviations(const MomentSeries& series, const BulkMoments& bulk);

struct PowerLawFit {
  double exponent = 0.0;
  double prefactor = 0.0;
  double r_squared = 0.0;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Unweighted least squares on (log x, log y).
PowerLawFit fit_power_law(std::span<const Point> points);

/// (max - min) / mean of |M_m| across configurations.
double relative_spread(std::span<const MomentSeries> configurations, int m);

}  // namespace momentlab::moments
