#pragma once

#include <vector>

#include "momentlab/lattice.hpp"

namespace momentlab::dynamics {

inline constexpr Complex kDefaultOnsite{1040.0, -3.0};

/// Six-term PT model with gain/loss contrast gamma and the long-range coupling alpha.
lattice::LatticeModel pt_model(double gamma, double alpha, Complex onsite = kDefaultOnsite);

/// Gaussian tone burst exp[-(t - t0)^2 / (2 sigma^2) - i 2 pi carrier t] injected at one site.
struct DriveSpec {
  int source = 0;
  double center = 0.05;    // t0 (s)
  double width = 0.01;     // sigma (s)
  double carrier = 1040.0; // Hz
  double duration = 3.0;   // T (s)
  double step = 0.0;       // dt (s); 0 picks the largest step allowed by the contract
  int record_every = 0;    // steps between recorded slices; 0 picks about 600 slices
  double amplitude = 1.0;  // 0 gives free evolution of `initial`
  std::vector<Complex> initial;  // psi(0); empty means zero
};

/// Largest admissible step: 0.1 / (2 pi ||H - carrier||_inf). The integrator runs
/// in a frame rotating at the carrier, so the bound is set by the rotating-frame
/// generator rather than by the absolute frequency.
double max_step(const Eigen::MatrixXcd& h, double carrier);

struct WaveField {
  std::vector<double> times;
  Eigen::MatrixXcd amplitudes;  // rows = recorded times, cols = sites
  bool compensated = false;
  bool normalized = false;
  std::vector<bool> valid;      // false for zero-norm slices left unnormalized

  int slices() const { return static_cast<int>(times.size()); }
  int sites() const { return static_cast<int>(amplitudes.cols()); }
};

/// Classical RK4 for i dpsi/dt = 2 pi H psi + s(t) e_src from psi(0) = 0 (or the
/// drive's initial state). Time zero is always recorded. Throws InvalidArgument
/// on a contract violation and NumericalError on non-finite amplitudes.
WaveField evolve(const Eigen::MatrixXcd& h, const DriveSpec& drive);

struct ProcessedField {
  WaveField raw;
  WaveField compensated;  // times exp[-2 pi Im(omega0) t]
  WaveField normalized;   // compensated, then unit norm per slice
  int zero_slices = 0;
};

ProcessedField compensate_normalize(const WaveField& field, Complex onsite);

struct GrowthFitOptions {
  double window_fraction = 0.5;  // fit over the final fraction of the record
  double exclude_before = 0.0;   // drop slices earlier than this (end of the drive)
  /// Adds p * log(t - reference) to log|psi| before the fit, removing the slow
  /// algebraic t^(-p) factor of a spreading packet. p = 0 fits log|psi| itself.
  double algebraic_exponent = 0.0;
  double reference_time = 0.0;
};

inline constexpr double kAmplitudeFloor = 1e-12;

/// OLS slope (1/s) of log|psi_site(t)| on a compensated, un-normalized field.
double growth_rate(const WaveField& field, int site, const GrowthFitOptions& options = {});

/// Sum_n n |psi_n|^2 / Sum_n |psi_n|^2 per slice (NaN for zero slices).
std::vector<double> center_of_mass(const WaveField& field);

/// OLS slope of the center of mass over slices with t >= from (sites/s).
double drift_velocity(const WaveField& field, double from);

/// Right-minus-left weight about `source`, divided by the total, per slice.
std::vector<double> weight_asymmetry(const WaveField& field, int source);

// ---- saddle-point growth -------------------------------------------------

struct Saddle {
  Complex z{};        // z = exp(-i k)
  Complex value{};    // H(k_s) - onsite
  double growth = 0;  // 2 pi Im value (1/s)
};

struct SaddleAnalysis {
  std::vector<Saddle> saddles;   // all finite nonzero roots of z h'(z)
  int dominant = -1;             // index into saddles
  double growth = 0.0;           // 2 pi Im h at the dominant saddle
};

/// Roots of z h'(z) via the companion matrix with Newton polish; the dominant
/// saddle is the lowest pass (in Im h) whose sublevel set contains a loop
/// around the origin. That lowest loop level bounds the long-time growth rate.
SaddleAnalysis saddle_analysis(const lattice::LatticeModel& model);
double saddle_growth(const lattice::LatticeModel& model);

// ---- regime classification and critical gamma ----------------------------

inline constexpr double kDefaultEpsilonRate = 2.0;

/// Driven run on an open chain with the source in the middle.
struct PulseRun {
  int sites = 201;
  double duration = 3.0;
  double width = 0.01;
  double center = 0.05;
  double step = 0.0;
  int record_every = 0;
  double algebraic_exponent = 0.5;
};

struct PulseResult {
  double gamma = 0.0;
  double growth = 0.0;       // fitted source-site rate (1/s)
  double saddle = 0.0;       // saddle prediction (1/s)
  double peak_gain = 0.0;    // max compensated amplitude at the end / at the pulse end
  double drift = 0.0;        // center-of-mass velocity after the pulse (sites/s)
  ProcessedField field;
};

PulseResult run_pulse(double gamma, double alpha, Complex onsite, const PulseRun& run);

struct CriticalSearch {
  double low = 0.13;
  double high = 0.45;
  double tolerance = 0.005;
  double epsilon_rate = kDefaultEpsilonRate;
};

struct CriticalResult {
  double gamma = 0.0;
  double low = 0.0;
  double high = 0.0;
  int evaluations = 0;
};

/// Bisection on sign(rate - epsilon). Throws NumericalError without a sign change.
CriticalResult critical_gamma_time(double alpha, Complex onsite, const PulseRun& run,
                                   const CriticalSearch& search = {});
CriticalResult critical_gamma_saddle(double alpha, Complex onsite,
                                     const CriticalSearch& search = {});

/// Saddle growth sampled across the bracket is non-decreasing (to `slack` 1/s).
bool saddle_monotone(double alpha, Complex onsite, const CriticalSearch& search,
                     int samples = 9, double slack = 1e-9);

/// alpha in [alpha_low, alpha_high] for which the saddle critical gamma hits `target`.
double calibrate_alpha(double target, Complex onsite, double alpha_low = 0.1,
                       double alpha_high = 0.3, double tolerance = 1e-4,
                       const CriticalSearch& search = {});

}  // namespace momentlab::dynamics
