#include "momentlab/moments.hpp"

#include <algorithm>
#include <cmath>

#include "momentlab/laurent.hpp"

namespace momentlab::moments {

MomentSeries eigen_moments(const linalg::ComplexSpectrum& spectrum, Complex reference, int m_max) {
  if (m_max < 1) throw InvalidArgument("m_max must be at least 1");
  if (spectrum.eigenvalues.empty()) throw InvalidArgument("spectrum is empty");
  MomentSeries s;
  s.reference = reference;
  s.sites = spectrum.size();
  s.linear_size = spectrum.size();
  s.values.assign(m_max + 1, Complex{});
  for (const Complex& e : spectrum.eigenvalues) {
    const Complex x = e - reference;
    Complex p = 1.0;
    for (int m = 0; m <= m_max; ++m) {
      s.values[m] += p;
      p *= x;
    }
  }
  const double n = static_cast<double>(s.sites);
  for (auto& v : s.values) v /= n;
  s.values[0] = 1.0;
  return s;
}

MomentSeries trace_moments(const lattice::HamiltonianMatrix& h, Complex reference, int m_max) {
  if (m_max < 1) throw InvalidArgument("m_max must be at least 1");
  MomentSeries s;
  s.reference = reference;
  s.sites = h.size();
  s.linear_size = h.domain.linear_size();
  s.dimension = h.domain.dimension();
  s.values = linalg::shifted_power_traces(h.matrix, reference, m_max);
  for (auto& v : s.values) v /= static_cast<double>(s.sites);
  return s;
}

BulkMoments bulk_moments(const lattice::LatticeModel& model, int m_max, bool include_onsite) {
  if (m_max < 0) throw InvalidArgument("m_max must be non-negative");
  BulkMoments b;
  b.values = constant_terms_of_powers(LaurentPolynomial::generator(model, include_onsite), m_max);
  b.amplitude_scale = model.max_amplitude();
  b.includes_onsite = include_onsite;
  return b;
}

double denominator_threshold(const BulkMoments& bulk, int m) {
  return 1e-9 * std::pow(bulk.amplitude_scale, m);
}

DeviationSeries deviations(const MomentSeries& series, const BulkMoments& bulk) {
  if (series.max_order() != bulk.max_order())
    throw InvalidArgument("moment and bulk series have different orders");
  DeviationSeries d;
  d.linear_size = series.linear_size;
  const int m_max = series.max_order();
  d.relative.assign(m_max + 1, 0.0);
  d.valid.assign(m_max + 1, false);
  for (int m = 1; m <= m_max; ++m) {
    const double denom = std::abs(bulk[m]);
    if (denom <= denominator_threshold(bulk, m)) continue;
    d.relative[m] = std::abs(series[m] - bulk[m]) / denom;
    d.valid[m] = true;
  }
  return d;
}

PowerLawFit fit_power_law(std::span<const Point> points) {
  if (points.size() < 3) throw InvalidArgument("power-law fit needs at least 3 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(points.size());
  for (const auto& p : points) {
    if (!(p.x > 0.0) || !(p.y > 0.0)) throw InvalidArgument("power-law fit needs positive x and y");
    const double lx = std::log(p.x), ly = std::log(p.y);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double varx = sxx - sx * sx / n;
  if (!(varx > 0.0)) throw InvalidArgument("power-law fit needs distinct x values");
  PowerLawFit fit;
  fit.exponent = (sxy - sx * sy / n) / varx;
  const double intercept = (sy - fit.exponent * sx) / n;
  fit.prefactor = std::exp(intercept);
  double ss_res = 0, ss_tot = 0;
  const double mean_y = sy / n;
  for (const auto& p : points) {
    const double ly = std::log(p.y);
    const double pred = intercept + fit.exponent * std::log(p.x);
    ss_res += (ly - pred) * (ly - pred);
    ss_tot += (ly - mean_y) * (ly - mean_y);
  }
  fit.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

double relative_spread(std::span<const MomentSeries> configurations, int m) {
  if (configurations.empty()) throw InvalidArgument("no configurations");
  double lo = std::abs(configurations[0][m]), hi = lo, sum = 0.0;
  for (const auto& c : configurations) {
    const double v = std::abs(c[m]);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    sum += v;
  }
  const double mean = sum / static_cast<double>(configurations.size());
  return mean > 0 ? (hi - lo) / mean : 0.0;
}

}  // namespace momentlab::moments
