#include "momentlab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Sparse>

#include "momentlab/linalg.hpp"

namespace momentlab::dynamics {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double xb = 0, yb = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    xb += x[i];
    yb += y[i];
  }
  xb /= n;
  yb /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - xb) * (x[i] - xb);
    sxy += (x[i] - xb) * (y[i] - yb);
  }
  return sxy / sxx;
}

}  // namespace

lattice::LatticeModel pt_model(double gamma, double alpha, Complex onsite) {
  const double gm = 1.0 - gamma, gp = 1.0 + gamma;
  std::vector<lattice::Hopping> hops = {
      {{3, 0, 0}, 2.0 * alpha * gm}, {{2, 0, 0}, gm * gm},  {{1, 0, 0}, 2.0 * alpha * gp},
      {{-1, 0, 0}, 2.0 * alpha * gm}, {{-2, 0, 0}, gp * gp}, {{-3, 0, 0}, 2.0 * alpha * gp},
  };
  return lattice::LatticeModel::from_hoppings(1, std::move(hops), onsite);
}

double max_step(const Eigen::MatrixXcd& h, double carrier) {
  Eigen::MatrixXcd shifted = h;
  shifted.diagonal().array() -= carrier;
  const double norm = linalg::infinity_norm(shifted);
  if (norm == 0.0) return std::numeric_limits<double>::infinity();
  return 0.1 / (kTwoPi * norm);
}

WaveField evolve(const Eigen::MatrixXcd& h, const DriveSpec& drive) {
  const int n = static_cast<int>(h.rows());
  if (n == 0 || h.cols() != n) throw InvalidArgument("evolve needs a square, nonempty matrix");
  if (drive.source < 0 || drive.source >= n)
    throw InvalidArgument("source site " + std::to_string(drive.source) + " is outside the lattice");
  if (!(drive.width > 0.0)) throw InvalidArgument("pulse width must be positive");
  if (!(drive.duration > 0.0)) throw InvalidArgument("duration must be positive");
  if (!drive.initial.empty() && static_cast<int>(drive.initial.size()) != n)
    throw InvalidArgument("initial state has the wrong length");

  const double limit = max_step(h, drive.carrier);
  long steps;
  double dt;
  if (drive.step > 0.0) {
    if (drive.step > limit * (1.0 + 1e-12))
      throw InvalidArgument("time step " + std::to_string(drive.step) +
                            " s violates the stability contract dt <= " + std::to_string(limit) +
                            " s");
    steps = std::lround(drive.duration / drive.step);
    if (steps < 1 || std::abs(steps * drive.step - drive.duration) > 1e-9 * drive.duration)
      throw InvalidArgument("duration must be an integer multiple of the time step");
    dt = drive.step;
  } else {
    steps = std::max<long>(1, static_cast<long>(std::ceil(drive.duration / limit)));
    dt = drive.duration / static_cast<double>(steps);
  }
  const long every = drive.record_every > 0 ? drive.record_every : std::max<long>(1, steps / 600);

  // Rotating frame phi = exp(i 2 pi c t) psi: i phi' = 2 pi (H - c) phi + envelope(t) e_src.
  Eigen::SparseMatrix<Complex> k(n, n);
  {
    std::vector<Eigen::Triplet<Complex>> entries;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        Complex v = h(i, j);
        if (i == j) v -= drive.carrier;
        if (v != Complex{}) entries.emplace_back(i, j, Complex{0.0, -kTwoPi} * v);
      }
    k.setFromTriplets(entries.begin(), entries.end());
  }
  const double two_s2 = 2.0 * drive.width * drive.width;
  auto envelope = [&](double t) {
    const double u = t - drive.center;
    return drive.amplitude * std::exp(-u * u / two_s2);
  };
  const int src = drive.source;
  Eigen::VectorXcd phi = Eigen::VectorXcd::Zero(n);
  for (std::size_t i = 0; i < drive.initial.size(); ++i) phi(i) = drive.initial[i];

  auto rhs = [&](double t, const Eigen::VectorXcd& y, Eigen::VectorXcd& out) {
    out.noalias() = k * y;
    out(src) += Complex{0.0, -1.0} * envelope(t);
  };

  WaveField field;
  const long records = steps / every + 1 + (steps % every ? 1 : 0);
  field.times.reserve(records);
  field.amplitudes.resize(records, n);
  int row = 0;
  auto record = [&](long step) {
    const double t = static_cast<double>(step) * dt;
    if (!phi.allFinite())
      throw NumericalError("non-finite amplitude at t = " + std::to_string(t) +
                           " s; shorten the duration");
    const Complex rot = std::polar(1.0, -kTwoPi * drive.carrier * t);
    field.times.push_back(t);
    field.amplitudes.row(row++) = (rot * phi).transpose();
  };

  record(0);
  Eigen::VectorXcd k1(n), k2(n), k3(n), k4(n), tmp(n);
  for (long s = 0; s < steps; ++s) {
    const double t = static_cast<double>(s) * dt;
    rhs(t, phi, k1);
    tmp = phi + 0.5 * dt * k1;
    rhs(t + 0.5 * dt, tmp, k2);
    tmp = phi + 0.5 * dt * k2;
    rhs(t + 0.5 * dt, tmp, k3);
    tmp = phi + dt * k3;
    rhs(t + dt, tmp, k4);
    phi += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if ((s + 1) % every == 0 || s + 1 == steps) record(s + 1);
  }
  field.amplitudes.conservativeResize(row, n);
  field.valid.assign(row, true);
  return field;
}

ProcessedField compensate_normalize(const WaveField& field, Complex onsite) {
  if (field.compensated || field.normalized)
    throw InvalidArgument("field is already compensated or normalized");
  ProcessedField out;
  out.raw = field;
  out.compensated = field;
  out.compensated.compensated = true;
  for (int r = 0; r < field.slices(); ++r)
    out.compensated.amplitudes.row(r) *= std::exp(-kTwoPi * onsite.imag() * field.times[r]);

  out.normalized = out.compensated;
  out.normalized.normalized = true;
  for (int r = 0; r < field.slices(); ++r) {
    const double norm = out.normalized.amplitudes.row(r).norm();
    if (norm == 0.0 || !std::isfinite(norm)) {
      out.normalized.valid[r] = false;
      ++out.zero_slices;
      continue;
    }
    out.normalized.amplitudes.row(r) /= norm;
  }
  return out;
}

double growth_rate(const WaveField& field, int site, const GrowthFitOptions& options) {
  if (!field.compensated || field.normalized)
    throw InvalidArgument("growth rate needs a compensated, un-normalized field");
  if (site < 0 || site >= field.sites()) throw InvalidArgument("site outside the field");
  if (field.slices() < 2) throw InvalidArgument("field has fewer than two slices");
  const double t_end = field.times.back();
  const double start =
      std::max(t_end - options.window_fraction * (t_end - field.times.front()), options.exclude_before);

  std::vector<double> x, y;
  bool above_floor = false;
  for (int r = 0; r < field.slices(); ++r) {
    const double t = field.times[r];
    if (t < start) continue;
    const double a = std::abs(field.amplitudes(r, site));
    if (a >= kAmplitudeFloor) above_floor = true;
    if (a == 0.0) continue;
    double v = std::log(a);
    if (options.algebraic_exponent != 0.0) {
      const double dt = t - options.reference_time;
      if (dt <= 0.0) continue;
      v += options.algebraic_exponent * std::log(dt);
    }
    x.push_back(t);
    y.push_back(v);
  }
  if (!above_floor)
    throw NumericalError("amplitude at site " + std::to_string(site) +
                         " stays below the noise floor across the fit window");
  if (x.size() < 3) throw InvalidArgument("fit window has fewer than 3 slices");
  return ols_slope(x, y);
}

std::vector<double> center_of_mass(const WaveField& field) {
  std::vector<double> com(field.slices());
  for (int r = 0; r < field.slices(); ++r) {
    double w = 0, m = 0;
    for (int i = 0; i < field.sites(); ++i) {
      const double p = std::norm(field.amplitudes(r, i));
      w += p;
      m += i * p;
    }
    com[r] = w > 0 ? m / w : std::numeric_limits<double>::quiet_NaN();
  }
  return com;
}

double drift_velocity(const WaveField& field, double from) {
  const auto com = center_of_mass(field);
  std::vector<double> x, y;
  for (int r = 0; r < field.slices(); ++r)
    if (field.times[r] >= from && std::isfinite(com[r])) {
      x.push_back(field.times[r]);
      y.push_back(com[r]);
    }
  if (x.size() < 3) throw InvalidArgument("not enough slices for a drift fit");
  return ols_slope(x, y);
}

std::vector<double> weight_asymmetry(const WaveField& field, int source) {
  std::vector<double> out(field.slices());
  for (int r = 0; r < field.slices(); ++r) {
    double left = 0, right = 0;
    for (int i = 0; i < field.sites(); ++i) {
      const double p = std::norm(field.amplitudes(r, i));
      if (i < source) left += p;
      if (i > source) right += p;
    }
    out[r] = left + right > 0 ? (right - left) / (right + left) : 0.0;
  }
  return out;
}

PulseResult run_pulse(double gamma, double alpha, Complex onsite, const PulseRun& run) {
  if (run.sites < 3) throw InvalidArgument("pulse run needs at least 3 sites");
  const auto model = pt_model(gamma, alpha, onsite);
  const auto domain = lattice::LatticeDomain::build({run.sites});
  const auto h = lattice::assemble(model, domain, lattice::BoundarySpec::open(1));

  DriveSpec drive;
  drive.source = run.sites / 2;
  drive.center = run.center;
  drive.width = run.width;
  drive.carrier = onsite.real();
  drive.duration = run.duration;
  drive.step = run.step;
  drive.record_every = run.record_every;

  PulseResult res;
  res.gamma = gamma;
  res.field = compensate_normalize(evolve(h.matrix, drive), onsite);
  const double pulse_end = run.center + 4.0 * run.width;
  GrowthFitOptions fit;
  fit.exclude_before = pulse_end;
  fit.algebraic_exponent = run.algebraic_exponent;
  fit.reference_time = run.center;
  res.growth = growth_rate(res.field.compensated, drive.source, fit);
  res.saddle = saddle_growth(model);

  const auto& c = res.field.compensated;
  int pulse_row = 0;
  while (pulse_row + 1 < c.slices() && c.times[pulse_row] < pulse_end) ++pulse_row;
  const double at_pulse = c.amplitudes.row(pulse_row).cwiseAbs().maxCoeff();
  const double at_end = c.amplitudes.row(c.slices() - 1).cwiseAbs().maxCoeff();
  res.peak_gain = at_pulse > 0 ? at_end / at_pulse : 0.0;
  res.drift = drift_velocity(res.field.normalized, pulse_end);
  return res;
}

namespace {

template <class Rate>
CriticalResult bisect(Rate&& rate, const CriticalSearch& search) {
  if (!(search.high > search.low)) throw InvalidArgument("empty gamma bracket");
  CriticalResult r;
  double lo = search.low, hi = search.high;
  const double f_lo = rate(lo) - search.epsilon_rate;
  const double f_hi = rate(hi) - search.epsilon_rate;
  r.evaluations = 2;
  if ((f_lo > 0) == (f_hi > 0))
    throw NumericalError("growth rate minus epsilon has no sign change in [" +
                         std::to_string(lo) + ", " + std::to_string(hi) + "]");
  const bool rising = f_hi > 0;
  while (hi - lo > search.tolerance) {
    const double mid = 0.5 * (lo + hi);
    const double f = rate(mid) - search.epsilon_rate;
    ++r.evaluations;
    if ((f > 0) == rising)
      hi = mid;
    else
      lo = mid;
  }
  r.low = lo;
  r.high = hi;
  r.gamma = 0.5 * (lo + hi);
  return r;
}

}  // namespace

CriticalResult critical_gamma_time(double alpha, Complex onsite, const PulseRun& run,
                                   const CriticalSearch& search) {
  return bisect(
      [&](double g) {
        const auto model = pt_model(g, alpha, onsite);
        const auto domain = lattice::LatticeDomain::build({run.sites});
        const auto h = lattice::assemble(model, domain, lattice::BoundarySpec::open(1));
        DriveSpec drive;
        drive.source = run.sites / 2;
        drive.center = run.center;
        drive.width = run.width;
        drive.carrier = onsite.real();
        drive.duration = run.duration;
        drive.step = run.step;
        drive.record_every = run.record_every;
        const auto f = compensate_normalize(evolve(h.matrix, drive), onsite);
        GrowthFitOptions fit;
        fit.exclude_before = run.center + 4.0 * run.width;
        fit.algebraic_exponent = run.algebraic_exponent;
        fit.reference_time = run.center;
        return growth_rate(f.compensated, drive.source, fit);
      },
      search);
}

CriticalResult critical_gamma_saddle(double alpha, Complex onsite, const CriticalSearch& search) {
  return bisect([&](double g) { return saddle_growth(pt_model(g, alpha, onsite)); }, search);
}

bool saddle_monotone(double alpha, Complex onsite, const CriticalSearch& search, int samples,
                     double slack) {
  double prev = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples; ++i) {
    const double g = search.low + (search.high - search.low) * i / (samples - 1);
    const double v = saddle_growth(pt_model(g, alpha, onsite));
    if (v < prev - slack) return false;
    prev = v;
  }
  return true;
}

double calibrate_alpha(double target, Complex onsite, double alpha_low, double alpha_high,
                       double tolerance, const CriticalSearch& search) {
  // The crossing may leave the regime bracket while alpha is scanned.
  CriticalSearch fine = search;
  fine.low = 0.0;
  fine.high = 0.95;
  fine.tolerance = 1e-5;
  auto offset = [&](double a) { return critical_gamma_saddle(a, onsite, fine).gamma - target; };
  double lo = alpha_low, hi = alpha_high;
  double f_lo = offset(lo), f_hi = offset(hi);
  if ((f_lo > 0) == (f_hi > 0))
    throw NumericalError("critical gamma does not cross the target for alpha in the bracket");
  while (hi - lo > tolerance) {
    const double mid = 0.5 * (lo + hi);
    const double f = offset(mid);
    if ((f > 0) == (f_lo > 0)) {
      lo = mid;
      f_lo = f;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace momentlab::dynamics
