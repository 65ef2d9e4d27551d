#include "momentlab/greens.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "momentlab/output.hpp"

namespace momentlab::greens {

std::vector<double> uniform_grid(double start, double stop, double step) {
  if (!(step > 0.0)) throw InvalidArgument("grid step must be positive");
  if (!(stop >= start)) throw InvalidArgument("grid stop must not precede start");
  const long count = static_cast<long>(std::floor((stop - start) / step + 1e-9)) + 1;
  std::vector<double> grid(count);
  for (long i = 0; i < count; ++i) grid[i] = start + step * static_cast<double>(i);
  return grid;
}

std::vector<double> grid_for_spectrum(const linalg::ComplexSpectrum& spectrum, double step,
                                      double margin) {
  if (spectrum.eigenvalues.empty()) throw InvalidArgument("empty spectrum");
  double lo = spectrum.eigenvalues[0].real(), hi = lo;
  for (const auto& e : spectrum.eigenvalues) {
    lo = std::min(lo, e.real());
    hi = std::max(hi, e.real());
  }
  lo = std::floor((lo - margin) / step) * step;
  hi = std::ceil((hi + margin) / step) * step;
  return uniform_grid(lo, hi, step);
}

ResponseStack synth_response(const Eigen::MatrixXcd& h, std::vector<double> grid, double noise,
                             std::uint64_t seed) {
  if (grid.empty()) throw InvalidArgument("empty frequency grid");
  for (std::size_t f = 1; f < grid.size(); ++f)
    if (!(grid[f] > grid[f - 1])) throw InvalidArgument("frequency grid must be strictly increasing");
  if (noise < 0.0) throw InvalidArgument("noise amplitude must be non-negative");

  ResponseStack stack;
  stack.noise = noise;
  stack.seed = seed;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double w : grid) {
    Eigen::MatrixXcd g;
    try {
      g = linalg::resolvent(h, Complex{w, 0.0});
    } catch (const NumericalError&) {
      stack.skipped.push_back(w);
      continue;
    }
    if (noise > 0.0) {
      std::vector<double> mags(g.size());
      for (Eigen::Index k = 0; k < g.size(); ++k) mags[k] = std::abs(g.data()[k]);
      std::nth_element(mags.begin(), mags.begin() + mags.size() / 2, mags.end());
      const double sigma = noise * mags[mags.size() / 2] / std::sqrt(2.0);
      for (Eigen::Index k = 0; k < g.size(); ++k) {
        const double re = normal(rng);
        const double im = normal(rng);
        g.data()[k] += sigma * Complex{re, im};
      }
    }
    stack.frequencies.push_back(w);
    stack.responses.push_back(std::move(g));
  }
  return stack;
}

std::vector<Branch> track_branches(const ResponseStack& stack) {
  const int frames = stack.size();
  if (frames < 3) throw InvalidArgument("branch tracking needs at least 3 grid points");
  const int n = static_cast<int>(stack.responses[0].rows());

  auto first = linalg::eigen_decompose(stack.responses[0]);
  std::vector<Branch> branches(n);
  Eigen::MatrixXcd current = first.vectors;
  Eigen::VectorXcd current_values = first.values;
  for (int b = 0; b < n; ++b) {
    branches[b].id = b;
    branches[b].values.reserve(frames);
    branches[b].values.push_back(first.values(b));
  }

  for (int f = 1; f < frames; ++f) {
    auto next = linalg::eigen_decompose(stack.responses[f]);
    const Eigen::MatrixXd overlap = (current.adjoint() * next.vectors).cwiseAbs();
    double scale = 0.0;
    for (int a = 0; a < n; ++a) scale = std::max(scale, std::abs(next.values(a)));
    if (scale == 0.0) scale = 1.0;
    // Maximise total overlap; eigenvalue distance only separates near ties.
    Eigen::MatrixXd cost(n, n);
    for (int b = 0; b < n; ++b)
      for (int a = 0; a < n; ++a)
        cost(b, a) = -overlap(b, a) + 1e-6 * std::abs(current_values(b) - next.values(a)) / scale;
    const auto assign = linalg::min_cost_assignment(cost);

    Eigen::MatrixXcd reordered(n, n);
    Eigen::VectorXcd reordered_values(n);
    for (int b = 0; b < n; ++b) {
      const int a = assign[b];
      const double ov = overlap(b, a);
      auto& br = branches[b];
      br.values.push_back(next.values(a));
      br.overlaps.push_back(ov);
      br.min_overlap = std::min(br.min_overlap, ov);
      if (ov < kCrossingOverlap) br.unresolved_crossing = true;
      // Keep the phase continuous so overlaps stay comparable along the branch.
      Complex phase = current.col(b).dot(next.vectors.col(a));
      Eigen::VectorXcd v = next.vectors.col(a);
      if (std::abs(phase) > 0) v *= std::conj(phase) / std::abs(phase);
      reordered.col(b) = v;
      reordered_values(b) = next.values(a);
    }
    current = std::move(reordered);
    current_values = std::move(reordered_values);
  }
  return branches;
}

PoleEstimate fit_pole(const Branch& branch, std::span<const double> frequencies) {
  if (branch.values.size() != frequencies.size())
    throw InvalidArgument("branch and frequency grid lengths differ");
  double peak = 0.0;
  for (const auto& v : branch.values) peak = std::max(peak, std::abs(v));
  const double floor = 0.1 * peak;  // 20 dB below the maximum

  std::vector<double> w;
  std::vector<Complex> y;
  for (std::size_t f = 0; f < frequencies.size(); ++f) {
    if (std::abs(branch.values[f]) < floor || branch.values[f] == Complex{}) continue;
    w.push_back(frequencies[f]);
    y.push_back(1.0 / branch.values[f]);
  }
  if (w.size() < 5)
    throw InvalidArgument("pole fit window has " + std::to_string(w.size()) +
                          " points; at least 5 are needed");

  const double n = static_cast<double>(w.size());
  double wbar = 0.0;
  Complex ybar{};
  for (std::size_t i = 0; i < w.size(); ++i) {
    wbar += w[i];
    ybar += y[i];
  }
  wbar /= n;
  ybar /= n;
  double sww = 0.0;
  Complex swy{};
  for (std::size_t i = 0; i < w.size(); ++i) {
    sww += (w[i] - wbar) * (w[i] - wbar);
    swy += (w[i] - wbar) * (y[i] - ybar);
  }
  const Complex slope = swy / sww;
  const Complex intercept = ybar - slope * wbar;

  double yscale = 0.0;
  for (const auto& v : y) yscale = std::max(yscale, std::abs(v));
  const double span = w.back() - w.front();
  if (std::abs(slope) * span <= 1e-9 * yscale)
    throw NumericalError("pole fit slope vanishes on branch " + std::to_string(branch.id) +
                         " (non-resonant branch)");

  PoleEstimate est;
  est.branch = branch.id;
  est.prefactor = 1.0 / slope;
  est.eigenvalue = -intercept / slope;
  est.window_low = w.front();
  est.window_high = w.back();
  est.window_points = static_cast<int>(w.size());
  double res2 = 0.0, y2 = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    res2 += std::norm(y[i] - (slope * w[i] + intercept));
    y2 += std::norm(y[i]);
  }
  est.residual = std::sqrt(res2 / y2);
  return est;
}

Reconstruction reconstruct_spectrum(const ResponseStack& stack, double residual_threshold) {
  Reconstruction r;
  r.branches = track_branches(stack);
  r.spectrum.source = "reconstructed";
  for (const auto& br : r.branches) {
    auto est = fit_pole(br, stack.frequencies);
    est.flagged = est.residual > residual_threshold;
    r.spectrum.eigenvalues.push_back(est.eigenvalue);
    r.poles.push_back(est);
  }
  return r;
}

void write_stack_csv(std::ostream& os, const ResponseStack& stack) {
  const long n = stack.responses.empty() ? 0 : stack.responses[0].rows();
  os << "# momentlab response stack, N=" << n << ", noise=" << io::format_double(stack.noise)
     << ", seed=" << stack.seed << "\n";
  for (int f = 0; f < stack.size(); ++f) {
    const auto& g = stack.responses[f];
    os << io::format_double(stack.frequencies[f]);
    for (long i = 0; i < n; ++i)
      for (long j = 0; j < n; ++j)
        os << ',' << io::format_double(g(i, j).real()) << ',' << io::format_double(g(i, j).imag());
    os << '\n';
  }
}

ResponseStack read_stack_csv(std::istream& is) {
  ResponseStack stack;
  std::string line;
  long n = -1;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto pos = line.find("N=");
      if (pos != std::string::npos) n = std::stol(line.substr(pos + 2));
      auto npos = line.find("noise=");
      if (npos != std::string::npos) stack.noise = std::stod(line.substr(npos + 6));
      auto spos = line.find("seed=");
      if (spos != std::string::npos) stack.seed = std::stoull(line.substr(spos + 5));
      continue;
    }
    std::vector<double> fields;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) fields.push_back(std::stod(cell));
    if (n < 0) {
      // No header: infer N from the field count 1 + 2 N^2.
      n = static_cast<long>(std::llround(std::sqrt((fields.size() - 1) / 2.0)));
    }
    if (static_cast<long>(fields.size()) != 1 + 2 * n * n)
      throw InvalidArgument("response stack line has " + std::to_string(fields.size()) +
                            " fields, expected " + std::to_string(1 + 2 * n * n));
    Eigen::MatrixXcd g(n, n);
    for (long i = 0; i < n; ++i)
      for (long j = 0; j < n; ++j) g(i, j) = {fields[1 + 2 * (i * n + j)], fields[2 + 2 * (i * n + j)]};
    stack.frequencies.push_back(fields[0]);
    stack.responses.push_back(std::move(g));
  }
  for (std::size_t f = 1; f < stack.frequencies.size(); ++f)
    if (!(stack.frequencies[f] > stack.frequencies[f - 1]))
      throw InvalidArgument("response stack frequencies must be strictly increasing");
  return stack;
}

}  // namespace momentlab::greens
