#include <doctest.h>

#include <map>
#include <numbers>
#include <random>

#include "momentlab/dynamics.hpp"
#include "momentlab/linalg.hpp"
#include "momentlab/presets.hpp"
#include "oracles.hpp"

using namespace momentlab;
using namespace momentlab::lattice;
using dynamics::DriveSpec;

namespace {

constexpr double kAlpha = cli::kCalibratedAlpha;

Eigen::MatrixXcd pt_chain(double gamma, int n) {
  return assemble(dynamics::pt_model(gamma, kAlpha), LatticeDomain::build({n}), BoundarySpec::open(1)).matrix;
}

// Largest step that satisfies the contract, resolves the pulse (dt <= sigma / 10)
// and divides the duration.
double test_step(const Eigen::MatrixXcd& h, const DriveSpec& d) {
  const double cap = std::min(dynamics::max_step(h, d.carrier), d.width / 10.0);
  return d.duration / std::ceil(d.duration / cap);
}

double oracle_deviation(const Eigen::MatrixXcd& h, DriveSpec d) {
  d.record_every = 1;
  const auto f = dynamics::evolve(h, d);
  oracle::Pulse p{d.source, d.center, d.width, d.carrier, d.amplitude};
  Eigen::VectorXcd psi0;
  if (!d.initial.empty()) psi0 = Eigen::Map<const Eigen::VectorXcd>(d.initial.data(), d.initial.size());
  const auto ref = oracle::duhamel(h, p, f.times, psi0);
  double err = 0, scale = 0;
  for (int s = 0; s < f.slices(); ++s) {
    err = std::max(err, (f.amplitudes.row(s).transpose() - ref[s]).norm());
    scale = std::max(scale, ref[s].norm());
  }
  return err / scale;
}

// Slices before any appreciable weight reaches the last `margin` sites at either end.
std::vector<int> before_edges(const dynamics::WaveField& f, int margin = 10, double frac = 0.01) {
  std::vector<int> out;
  for (int s = 0; s < f.slices(); ++s) {
    const auto row = f.amplitudes.row(s);
    const double total = row.squaredNorm();
    if (total == 0.0) continue;
    const double edge = row.head(margin).squaredNorm() + row.tail(margin).squaredNorm();
    if (edge > frac * total) break;
    out.push_back(s);
  }
  return out;
}

}  // namespace

TEST_CASE("PT hopping table") {
  const auto m = dynamics::pt_model(0.2, 0.3);
  std::map<int, Complex> t;
  for (const auto& h : m.hoppings()) t[h.delta[0]] = h.amplitude;
  CHECK(t.size() == 6);
  CHECK(std::abs(t[3] - 0.6 * 0.8) < 1e-15);
  CHECK(std::abs(t[2] - 0.64) < 1e-15);
  CHECK(std::abs(t[1] - 0.6 * 1.2) < 1e-15);
  CHECK(std::abs(t[-1] - 0.6 * 0.8) < 1e-15);
  CHECK(std::abs(t[-2] - 1.44) < 1e-15);
  CHECK(std::abs(t[-3] - 0.6 * 1.2) < 1e-15);
  CHECK(m.onsite() == Complex(1040, -3));
}

TEST_CASE("scalar mode under a slow drive settles at 1 / |2 pi Im w0|") {
  for (double loss : {3.0, 6.0}) {
    Eigen::MatrixXcd h(1, 1);
    h(0, 0) = Complex(1040, -loss);
    DriveSpec d;
    d.width = 2.0;
    d.center = 10.0;
    d.duration = 20.0;
    const auto f = dynamics::evolve(h, d);
    double peak = 0;
    for (int s = 0; s < f.slices(); ++s) peak = std::max(peak, std::abs(f.amplitudes(s, 0)));
    CHECK(peak == doctest::Approx(1.0 / (2 * std::numbers::pi * loss)).epsilon(1e-3));
  }
}

TEST_CASE("RK4 agrees with the eigenbasis convolution") {
  std::mt19937_64 rng(17);
  std::vector<Eigen::MatrixXcd> cases{pt_chain(0.3, 9), pt_chain(0.0, 4), pt_chain(0.45, 10)};
  for (int n : {1, 3, 6, 10}) {
    std::normal_distribution<double> g;
    Eigen::MatrixXcd h(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) h(i, j) = Complex(g(rng), g(rng));
    h.diagonal().array() += Complex(1040, -2);
    cases.push_back(h);
  }
  for (const auto& h : cases) {
    DriveSpec d;
    d.source = static_cast<int>(h.rows()) / 2;
    d.duration = 0.2;
    d.step = test_step(h, d);
    const double e1 = oracle_deviation(h, d);
    d.step /= 2;
    const double e2 = oracle_deviation(h, d);
    CHECK(e1 <= 1e-6);
    CHECK(e1 / e2 >= 8.0);
  }
}

TEST_CASE("free evolution of an initial state matches the exact propagator") {
  const auto h = pt_chain(0.3, 8);
  DriveSpec d;
  d.amplitude = 0.0;
  d.duration = 0.3;
  d.initial.assign(8, 0.0);
  d.initial[2] = 1.0;
  d.initial[5] = Complex(0, 0.5);
  d.step = test_step(h, d);
  CHECK(oracle_deviation(h, d) <= 1e-6);
}

TEST_CASE("integrator contract") {
  const auto h = pt_chain(0.2, 5);
  DriveSpec d;
  d.duration = 0.1;
  d.step = 2 * dynamics::max_step(h, d.carrier);
  CHECK_THROWS_AS(dynamics::evolve(h, d), InvalidArgument);
  d.step = 0.1 / 77.5;
  CHECK_THROWS_AS(dynamics::evolve(h, d), InvalidArgument);
  d.step = 0;
  d.source = 5;
  CHECK_THROWS_AS(dynamics::evolve(h, d), InvalidArgument);
  d.source = 0;
  d.initial.assign(3, 0.0);
  CHECK_THROWS_AS(dynamics::evolve(h, d), InvalidArgument);
  d.initial.clear();
  const auto f = dynamics::evolve(h, d);
  CHECK(f.times.front() == 0.0);
  CHECK(f.times.back() == doctest::Approx(0.1));
  CHECK(f.amplitudes.row(0).norm() == 0.0);
}

TEST_CASE("loss compensation") {
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(3, 3);
  h.diagonal().setConstant(Complex(1040, -3));
  DriveSpec d;
  d.source = 1;
  d.duration = 0.5;
  d.step = 1e-4;
  const auto p = dynamics::compensate_normalize(dynamics::evolve(h, d), h(0, 0));
  double lo = 1e300, hi = 0;
  for (int s = 0; s < p.compensated.slices(); ++s)
    if (p.compensated.times[s] > d.center + 8 * d.width) {
      lo = std::min(lo, std::abs(p.compensated.amplitudes(s, 1)));
      hi = std::max(hi, std::abs(p.compensated.amplitudes(s, 1)));
    }
  CHECK((hi - lo) / hi <= 1e-6);
  dynamics::GrowthFitOptions opt;
  opt.exclude_before = d.center + 5 * d.width;
  CHECK(std::abs(dynamics::growth_rate(p.compensated, 1, opt)) < 1e-5);
  CHECK_THROWS_AS(dynamics::growth_rate(p.compensated, 0, opt), NumericalError);
  CHECK_THROWS_AS(dynamics::growth_rate(p.raw, 1, opt), InvalidArgument);
  CHECK_THROWS_AS(dynamics::growth_rate(p.compensated, 3, opt), InvalidArgument);
  CHECK_THROWS_AS(dynamics::compensate_normalize(p.compensated, h(0, 0)), InvalidArgument);

  Eigen::MatrixXcd lossless = pt_chain(0.2, 5);
  lossless.diagonal().setConstant(1040.0);
  d.source = 2;
  d.step = 0;
  d.duration = 0.2;
  const auto q = dynamics::compensate_normalize(dynamics::evolve(lossless, d), 1040.0);
  CHECK((q.compensated.amplitudes.array() == q.raw.amplitudes.array()).all());
}

TEST_CASE("compensation removes exactly the uniform loss") {
  // Free evolution under H, compensated, equals evolution under H - i Im(w0).
  const auto h = pt_chain(0.4, 8);
  Eigen::MatrixXcd lossless = h;
  lossless.diagonal().array() -= Complex(0, h(0, 0).imag());
  DriveSpec d;
  d.amplitude = 0.0;
  d.duration = 0.4;
  d.initial.assign(8, 0.0);
  d.initial[4] = 1.0;
  d.step = test_step(h, d);
  d.record_every = 1;
  const auto p = dynamics::compensate_normalize(dynamics::evolve(h, d), h(0, 0));
  const auto ref = oracle::duhamel(lossless, {.amplitude = 0.0}, p.compensated.times,
                                   Eigen::Map<const Eigen::VectorXcd>(d.initial.data(), 8));
  double err = 0, scale = 0;
  for (int s = 0; s < p.compensated.slices(); ++s) {
    err = std::max(err, (p.compensated.amplitudes.row(s).transpose() - ref[s]).norm());
    scale = std::max(scale, ref[s].norm());
  }
  CHECK(err / scale <= 1e-6);
}

TEST_CASE("normalized slices have unit norm") {
  const auto r = dynamics::run_pulse(0.3, kAlpha, dynamics::kDefaultOnsite, {.sites = 61, .duration = 0.5});
  const auto& n = r.field.normalized;
  CHECK(r.field.zero_slices == 1);
  CHECK_FALSE(n.valid[0]);
  for (int s = 1; s < n.slices(); ++s) {
    REQUIRE(n.valid[s]);
    CHECK(std::abs(n.amplitudes.row(s).squaredNorm() - 1.0) <= 1e-12);
  }
}

TEST_CASE("regimes of the PT chain") {
  const auto zero = dynamics::run_pulse(0.0, kAlpha, dynamics::kDefaultOnsite, {});
  const auto mid = dynamics::run_pulse(0.13, kAlpha, dynamics::kDefaultOnsite, {});
  const auto high = dynamics::run_pulse(0.45, kAlpha, dynamics::kDefaultOnsite, {});
  CHECK(mid.growth <= dynamics::kDefaultEpsilonRate);
  CHECK(high.growth > dynamics::kDefaultEpsilonRate);
  CHECK(high.peak_gain > 100.0);
  CHECK(high.saddle > 0.0);
  CHECK(std::abs(high.saddle - high.growth) <= 0.1 * high.growth);

  const auto asym = dynamics::weight_asymmetry(zero.field.compensated, 100);
  double worst = 0;
  for (int s : before_edges(zero.field.compensated))
    if (zero.field.raw.times[s] > 0.1) worst = std::max(worst, std::abs(asym[s]));
  CHECK(worst < 0.05);

  const auto spec = linalg::eigenvalues(pt_chain(0.0, 201));
  double im = 0;
  for (const auto& e : spec.eigenvalues) im = std::max(im, std::abs(e.imag() + 3.0));
  CHECK(im < 1e-8);
}

TEST_CASE("center of mass drifts one way for gamma > 0") {
  for (double g : {0.13, 0.3, 0.45}) {
    const auto r = dynamics::run_pulse(g, kAlpha, dynamics::kDefaultOnsite, {});
    const auto com = dynamics::center_of_mass(r.field.compensated);
    const auto idx = before_edges(r.field.compensated);
    int sign = 0;
    bool monotone = true;
    double prev = NAN;
    for (int s : idx) {
      if (r.field.raw.times[s] < 0.1) continue;
      if (!std::isnan(prev)) {
        const int d = com[s] > prev ? 1 : com[s] < prev ? -1 : 0;
        if (sign == 0) sign = d;
        monotone = monotone && (d == sign || d == 0);
      }
      prev = com[s];
    }
    CHECK(monotone);
    CHECK(sign != 0);
    CHECK(idx.size() > 100);
    CHECK(r.drift * sign > 0);
  }
}

TEST_CASE("saddle growth") {
  const auto herm = LatticeModel::from_hoppings(1, {{{1, 0, 0}, 1.0}, {{-1, 0, 0}, 1.0}, {{2, 0, 0}, 0.3}, {{-2, 0, 0}, 0.3}}, 0.0);
  CHECK(std::abs(dynamics::saddle_growth(herm)) < 1e-9);
  CHECK(std::abs(dynamics::saddle_growth(dynamics::pt_model(0.0, kAlpha))) < 1e-9);
  CHECK(dynamics::saddle_growth(LatticeModel::from_hoppings(1, {}, 3.0)) == 0.0);
  // one-way hopping: |h| is constant on circles, no growth at a fixed site
  CHECK(dynamics::saddle_growth(LatticeModel::from_hoppings(1, {{{1, 0, 0}, 2.0}}, 0.0)) == 0.0);
  // Hatano-Nelson: h = a z + b / z has saddles at z = +-sqrt(b/a) with Im h = 0
  const auto hn = LatticeModel::from_hoppings(1, {{{1, 0, 0}, 2.0}, {{-1, 0, 0}, 0.5}}, 0.0);
  CHECK(std::abs(dynamics::saddle_growth(hn)) < 1e-9);
  const auto an = dynamics::saddle_analysis(dynamics::pt_model(0.45, kAlpha));
  REQUIRE(an.dominant >= 0);
  const auto& s = an.saddles[an.dominant];
  CHECK(std::abs(s.growth - 2 * std::numbers::pi * s.value.imag()) < 1e-12);
  CHECK_THROWS_AS(dynamics::saddle_growth(LatticeModel::from_hoppings(2, {{{1, 0, 0}, 1.0}}, 0.0)), InvalidArgument);

  dynamics::CriticalSearch search;
  CHECK(dynamics::saddle_monotone(kAlpha, dynamics::kDefaultOnsite, search));
}

TEST_CASE("time-domain and saddle classifications agree away from the critical point") {
  const auto crit = dynamics::critical_gamma_saddle(kAlpha, dynamics::kDefaultOnsite);
  int compared = 0;
  for (int j = 0; j < 20; ++j) {
    const double g = 0.6 * j / 19.0;
    if (std::abs(g - crit.gamma) <= 0.01) continue;
    const auto r = dynamics::run_pulse(g, kAlpha, dynamics::kDefaultOnsite, {});
    CHECK_MESSAGE((r.growth > dynamics::kDefaultEpsilonRate) == (r.saddle > dynamics::kDefaultEpsilonRate),
                  "gamma=" << g << " time rate " << r.growth << " saddle " << r.saddle);
    ++compared;
  }
  CHECK(compared >= 19);
}

TEST_CASE("critical gamma search") {
  const auto s = dynamics::critical_gamma_saddle(kAlpha, dynamics::kDefaultOnsite);
  const auto t = dynamics::critical_gamma_time(kAlpha, dynamics::kDefaultOnsite, {});
  CHECK(std::abs(s.gamma - t.gamma) <= 0.01);
  CHECK(s.high - s.low <= 0.005 + 1e-12);
  dynamics::CriticalSearch none{0.0, 0.1, 0.005, 2.0};
  CHECK_THROWS_AS(dynamics::critical_gamma_saddle(kAlpha, dynamics::kDefaultOnsite, none), NumericalError);
  dynamics::CriticalSearch empty{0.3, 0.2, 0.005, 2.0};
  CHECK_THROWS_AS(dynamics::critical_gamma_saddle(kAlpha, dynamics::kDefaultOnsite, empty), InvalidArgument);
}
