#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "momentlab/linalg.hpp"

namespace momentlab::greens {

/// Frequency-swept response matrices G(w_f) = (w_f - H)^{-1}, optionally with
/// additive complex Gaussian noise.
struct ResponseStack {
  std::vector<double> frequencies;
  std::vector<Eigen::MatrixXcd> responses;
  double noise = 0.0;  // relative to the median |G| entry
  std::uint64_t seed = 0;
  std::vector<double> skipped;  // ill-conditioned grid points left out

  int size() const { return static_cast<int>(frequencies.size()); }
};

/// Uniform grid from `start` in steps of `step` up to and including `stop`.
std::vector<double> uniform_grid(double start, double stop, double step);

/// Grid covering [min Re E - margin, max Re E + margin].
std::vector<double> grid_for_spectrum(const linalg::ComplexSpectrum& spectrum, double step,
                                      double margin = 10.0);

ResponseStack synth_response(const Eigen::MatrixXcd& h, std::vector<double> grid,
                             double noise = 0.0, std::uint64_t seed = 0);

/// One eigenvalue branch lambda_b(w) of G tracked across the grid.
struct Branch {
  int id = 0;
  std::vector<Complex> values;      // per grid point
  std::vector<double> overlaps;     // |<v(w_f)|v(w_{f+1})>| per step (size F-1)
  double min_overlap = 1.0;
  bool unresolved_crossing = false;
};

/// Overlap below which a matched step is flagged as an unresolved crossing.
inline constexpr double kCrossingOverlap = 0.5;

std::vector<Branch> track_branches(const ResponseStack& stack);

struct PoleEstimate {
  Complex eigenvalue{};
  Complex prefactor{};
  double residual = 0.0;  // rms |1/lambda - fit| / rms |1/lambda| over the window
  int branch = 0;
  double window_low = 0.0;
  double window_high = 0.0;
  int window_points = 0;
  bool flagged = false;
};

/// Fit lambda(w) = c / (w - E) on the points within 20 dB of the branch maximum,
/// by linear least squares on 1/lambda = w/c - E/c.
PoleEstimate fit_pole(const Branch& branch, std::span<const double> frequencies);

struct Reconstruction {
  linalg::ComplexSpectrum spectrum;
  std::vector<PoleEstimate> poles;
  std::vector<Branch> branches;
};

inline constexpr double kDefaultResidualThreshold = 1e-3;

Reconstruction reconstruct_spectrum(const ResponseStack& stack,
                                    double residual_threshold = kDefaultResidualThreshold);

/// CSV matrix series: one line per frequency, "w, re00, im00, re01, im01, ..."
/// with entries in row-major order. The header line records the matrix size.
void write_stack_csv(std::ostream& os, const ResponseStack& stack);
ResponseStack read_stack_csv(std::istream& is);

}  // namespace momentlab::greens
