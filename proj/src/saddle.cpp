#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "momentlab/dynamics.hpp"

namespace momentlab::dynamics {

namespace {

constexpr int kThetaCells = 2048;
constexpr int kRadialCells = 512;
constexpr double kRadialMargin = 1.5;

struct Laurent1d {
  int low = 0;  // lowest power
  std::vector<Complex> coef;  // coef[i] multiplies z^(low + i)

  Complex operator()(Complex z) const {
    Complex acc{};
    for (int i = static_cast<int>(coef.size()) - 1; i >= 0; --i) acc = acc * z + coef[i];
    return acc * std::pow(z, low);
  }
};

Laurent1d generator(const lattice::LatticeModel& model) {
  int lo = 0, hi = 0;
  for (const auto& h : model.hoppings()) {
    lo = std::min(lo, h.delta[0]);
    hi = std::max(hi, h.delta[0]);
  }
  Laurent1d p;
  p.low = lo;
  p.coef.assign(hi - lo + 1, Complex{});
  for (const auto& h : model.hoppings()) p.coef[h.delta[0] - lo] += h.amplitude;
  return p;
}

Complex horner(const std::vector<Complex>& c, Complex z) {
  Complex acc{};
  for (int i = static_cast<int>(c.size()) - 1; i >= 0; --i) acc = acc * z + c[i];
  return acc;
}

// Nonzero roots of the ordinary polynomial sum c[i] z^i.
std::vector<Complex> polynomial_roots(std::vector<Complex> c) {
  double scale = 0.0;
  for (const auto& v : c) scale = std::max(scale, std::abs(v));
  const double tiny = 1e-14 * scale;
  while (!c.empty() && std::abs(c.back()) <= tiny) c.pop_back();
  std::size_t lead = 0;
  while (lead < c.size() && std::abs(c[lead]) <= tiny) ++lead;
  c.erase(c.begin(), c.begin() + static_cast<long>(lead));  // roots at z = 0 are not saddles
  const int deg = static_cast<int>(c.size()) - 1;
  if (deg < 1) return {};

  Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(deg, deg);
  for (int i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
  for (int i = 0; i < deg; ++i) comp(i, deg - 1) = -c[i] / c[deg];
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(comp, false);
  if (solver.info() != Eigen::Success) throw NumericalError("companion eigensolver did not converge");

  std::vector<Complex> deriv(deg);
  for (int i = 1; i <= deg; ++i) deriv[i - 1] = static_cast<double>(i) * c[i];
  std::vector<Complex> roots;
  for (int r = 0; r < deg; ++r) {
    Complex z = solver.eigenvalues()(r);
    for (int it = 0; it < 8; ++it) {
      const Complex d = horner(deriv, z);
      if (d == Complex{}) break;
      const Complex step = horner(c, z) / d;
      z -= step;
      if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      throw NumericalError("saddle root polish diverged");
    roots.push_back(z);
  }
  return roots;
}

// Union-find over a theta-tiled copy of the (log r, theta) grid: a component that
// holds both (u, theta) and (u, theta + 2 pi) encircles the origin.
class LoopDetector {
 public:
  LoopDetector(const Laurent1d& h, double u_low, double u_high) : values_(kRadialCells * kThetaCells) {
    for (int a = 0; a < kRadialCells; ++a) {
      const double u = u_low + (u_high - u_low) * a / (kRadialCells - 1);
      for (int b = 0; b < kThetaCells; ++b) {
        const double th = 2.0 * std::numbers::pi * b / kThetaCells;
        values_[a * kThetaCells + b] = h(std::polar(std::exp(u), th)).imag();
      }
    }
  }

  bool wraps(double level) {
    const int width = 2 * kThetaCells;
    parent_.resize(static_cast<std::size_t>(kRadialCells) * width);
    std::iota(parent_.begin(), parent_.end(), 0);
    auto below = [&](int a, int b) { return values_[a * kThetaCells + (b % kThetaCells)] < level; };
    for (int a = 0; a < kRadialCells; ++a)
      for (int b = 0; b < width; ++b) {
        if (!below(a, b)) continue;
        const int id = a * width + b;
        if (b + 1 < width && below(a, b + 1)) unite(id, id + 1);
        if (a + 1 < kRadialCells && below(a + 1, b)) unite(id, id + width);
      }
    for (int a = 0; a < kRadialCells; ++a)
      for (int b = 0; b < kThetaCells; ++b)
        if (below(a, b) && find(a * width + b) == find(a * width + b + kThetaCells)) return true;
    return false;
  }

 private:
  int find(int x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(int x, int y) {
    x = find(x);
    y = find(y);
    if (x != y) parent_[std::max(x, y)] = std::min(x, y);
  }

  std::vector<double> values_;
  std::vector<int> parent_;
};

}  // namespace

SaddleAnalysis saddle_analysis(const lattice::LatticeModel& model) {
  if (model.dimension() != 1) throw InvalidArgument("saddle analysis needs a 1D model");
  SaddleAnalysis out;
  if (model.hoppings().empty()) return out;

  const Laurent1d h = generator(model);
  // z h'(z) = sum d A_d z^d; shift by z^(-low) to get an ordinary polynomial.
  std::vector<Complex> zdh(h.coef.size());
  for (std::size_t i = 0; i < h.coef.size(); ++i)
    zdh[i] = static_cast<double>(h.low + static_cast<int>(i)) * h.coef[i];
  for (const auto& z : polynomial_roots(zdh)) {
    Saddle s;
    s.z = z;
    s.value = h(z);
    s.growth = 2.0 * std::numbers::pi * s.value.imag();
    out.saddles.push_back(s);
  }
  if (out.saddles.empty()) {
    // A single hopping term has no saddle; |h| is constant on circles and Im h
    // takes both signs on each, so the lowest loop level is 0.
    return out;
  }

  std::vector<int> order(out.saddles.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return out.saddles[a].value.imag() < out.saddles[b].value.imag();
  });
  double u_low = std::log(std::abs(out.saddles[0].z)), u_high = u_low;
  double scale = 0.0;
  for (const auto& s : out.saddles) {
    u_low = std::min(u_low, std::log(std::abs(s.z)));
    u_high = std::max(u_high, std::log(std::abs(s.z)));
  }
  for (const auto& hop : model.hoppings()) scale += std::abs(hop.amplitude);
  LoopDetector detector(h, u_low - kRadialMargin, u_high + kRadialMargin);

  const double merge = 1e-12 * scale;
  for (std::size_t j = 0; j < order.size(); ++j) {
    const double v = out.saddles[order[j]].value.imag();
    if (j + 1 < order.size() && out.saddles[order[j + 1]].value.imag() - v <= merge) continue;
    const double level =
        j + 1 < order.size() ? 0.5 * (v + out.saddles[order[j + 1]].value.imag()) : v + scale;
    if (detector.wraps(level)) {
      out.dominant = order[j];
      out.growth = out.saddles[order[j]].growth;
      return out;
    }
  }
  throw NumericalError("no saddle level admits a loop around the origin");
}

double saddle_growth(const lattice::LatticeModel& model) { return saddle_analysis(model).growth; }

}  // namespace momentlab::dynamics
