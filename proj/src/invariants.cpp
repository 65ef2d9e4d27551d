#include "momentlab/invariants.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "momentlab/config.hpp"
#include "momentlab/dynamics.hpp"
#include "momentlab/experiment.hpp"
#include "momentlab/greens.hpp"
#include "momentlab/linalg.hpp"
#include "momentlab/moments.hpp"
#include "momentlab/presets.hpp"
#include "momentlab/walks.hpp"

namespace momentlab::cli {

namespace {

using lattice::BoundarySpec;
using lattice::Closure;
using lattice::Hopping;
using lattice::LatticeDomain;
using lattice::LatticeModel;

LatticeModel chain_model() {
  return LatticeModel::from_hoppings(1, {{{2, 0, 0}, 1.0}, {{-2, 0, 0}, -1.0}, {{1, 0, 0}, 4.0}, {{-1, 0, 0}, 4.0}},
                                     {1038.0, -4.5});
}

LatticeModel square_model() {
  return LatticeModel::from_hoppings(
      2, {{{1, 0, 0}, {0, 2}}, {{-1, 0, 0}, {0, 2}}, {{1, 1, 0}, 4.0}, {{-1, -1, 0}, 4.0}}, {1040.0, -6.0});
}

double rel(Complex a, Complex b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

CheckResult gbc_endpoints() {
  const auto model = chain_model();
  const auto d = LatticeDomain::build({30});
  const auto obc = lattice::assemble(model, d, BoundarySpec::open(1)).matrix;
  const auto pbc = lattice::assemble(model, d, BoundarySpec::periodic(1)).matrix;
  const auto g0 = lattice::assemble(model, d, BoundarySpec::uniform(1, Closure::generalized(0))).matrix;
  const auto g1 = lattice::assemble(model, d, BoundarySpec::uniform(1, Closure::generalized(1))).matrix;
  const auto gh = lattice::assemble(model, d, BoundarySpec::uniform(1, Closure::generalized(0.5))).matrix;
  const double v = std::max({(g0 - obc).cwiseAbs().maxCoeff(), (g1 - pbc).cwiseAbs().maxCoeff(),
                             (gh - (obc + 0.5 * (pbc - obc))).cwiseAbs().maxCoeff()});
  return {"gbc_interpolation", v == 0.0, v, 0.0, "GBC(0)=OBC, GBC(1)=PBC, GBC(1/2) midway"};
}

CheckResult circulant_bloch() {
  const auto model = chain_model();
  const int n = 30;
  const auto spec = linalg::eigenvalues(lattice::assemble(model, LatticeDomain::build({n}), BoundarySpec::periodic(1)));
  std::vector<Complex> bloch;
  for (int j = 0; j < n; ++j) {
    const double k = 2.0 * std::numbers::pi * j / n;
    bloch.push_back(model.bloch(std::span<const double>(&k, 1)));
  }
  const double v = linalg::matching_distance(spec.eigenvalues, bloch);
  return {"pbc_bloch_spectrum", v <= 1e-9, v, 1e-9, "PBC chain spectrum equals Bloch samples"};
}

CheckResult moment_routes(double tol) {
  const auto model = chain_model();
  double worst = 0.0;
  for (const auto& b : {BoundarySpec::open(1), BoundarySpec::periodic(1), BoundarySpec::uniform(1, Closure::generalized(0.5))}) {
    const auto d = LatticeDomain::build({30});
    const auto h = lattice::assemble(model, d, b);
    const auto eig = moments::eigen_moments(linalg::eigenvalues(h), model.onsite(), 10);
    const auto tr = moments::trace_moments(h, model.onsite(), 10);
    const auto graph = walks::build_walk_graph(model, d, b);
    for (int m = 1; m <= 10; ++m) {
      Complex w{};
      for (const auto& x : walks::rooted_walk_sums(graph, m)) w += x;
      w /= 30.0;
      const double floor = 1e-3 * std::pow(10.0, m);
      worst = std::max({worst, rel(eig[m], tr[m], floor), rel(tr[m], w, floor)});
    }
  }
  return {"moment_routes", worst <= tol, worst, tol, "eigen, trace and walk moments, N=30, m<=10"};
}

CheckResult bulk_oracle(double tol) {
  double worst = 0.0;
  for (const auto& model : {chain_model(), square_model(), dynamics::pt_model(0.3, kCalibratedAlpha)}) {
    const auto bulk = moments::bulk_moments(model, 8);
    double s = 0;
    for (const auto& h : model.hoppings()) s += std::abs(h.amplitude);
    for (int m = 1; m <= 8; ++m) worst = std::max(worst, rel(bulk[m], walks::bulk_walk_weight(model, m), 1e-12 * std::pow(s, m)));
  }
  return {"bulk_weight", worst <= tol, worst, tol, "Laurent constant term equals bulk walk weight, m<=8"};
}

CheckResult decomposition(double tol) {
  double worst = 0.0;
  bool shells = true;
  for (int m = 1; m <= 6; ++m) {
    const auto r = walks::decomposition_check(chain_model(), LatticeDomain::build({30}), BoundarySpec::open(1), m, tol);
    worst = std::max(worst, r.relative_error);
    shells = shells && r.shell_bound_holds;
  }
  return {"decomposition_identity", worst <= tol && shells, worst, tol, "bulk minus missing weight, OBC N=30, m<=6"};
}

CheckResult resolvent_residual() {
  const auto h = lattice::assemble(chain_model(), LatticeDomain::build({30}), BoundarySpec::open(1)).matrix;
  const auto g = linalg::resolvent(h, 1050.0);
  const Eigen::MatrixXcd res = (Complex{1050.0} * Eigen::MatrixXcd::Identity(30, 30) - h) * g - Eigen::MatrixXcd::Identity(30, 30);
  const double v = res.cwiseAbs().maxCoeff();
  const double tol = 1e-10 * linalg::infinity_norm(h);
  return {"resolvent_residual", v <= tol, v, tol, "(wI - H) G = I at w = 1050"};
}

CheckResult greens_roundtrip(double tol) {
  const auto h = lattice::assemble(chain_model(), LatticeDomain::build({30}), BoundarySpec::open(1)).matrix;
  const auto direct = linalg::eigenvalues(h);
  const auto stack = greens::synth_response(h, greens::grid_for_spectrum(direct, 0.1));
  const auto rec = greens::reconstruct_spectrum(stack);
  const double v = linalg::matching_distance(rec.spectrum.eigenvalues, direct.eigenvalues);
  return {"greens_roundtrip", v <= tol, v, tol, "single-pole fits recover the OBC chain spectrum"};
}

CheckResult integrator_order() {
  // Self-convergence: with an O(dt^4) method the successive differences shrink 16x.
  const auto h = lattice::assemble(dynamics::pt_model(0.2, kCalibratedAlpha), LatticeDomain::build({9}), BoundarySpec::open(1)).matrix;
  dynamics::DriveSpec drive;
  drive.source = 4;
  drive.duration = 0.2;
  drive.center = 0.05;
  const double base = dynamics::max_step(h, drive.carrier);
  std::vector<Eigen::VectorXcd> finals;
  for (int k = 0; k < 3; ++k) {
    drive.step = drive.duration / std::ceil(drive.duration / base) / std::pow(2.0, k);
    drive.record_every = 1 << 30;
    const auto f = dynamics::evolve(h, drive);
    finals.push_back(f.amplitudes.row(f.slices() - 1).transpose());
  }
  const double ratio = (finals[0] - finals[1]).norm() / (finals[1] - finals[2]).norm();
  return {"integrator_order", ratio >= 8.0, ratio, 8.0, "step halving shrinks the RK4 error at least 8x"};
}

CheckResult norm_contract(double tol) {
  const auto res = dynamics::run_pulse(0.13, kCalibratedAlpha, dynamics::kDefaultOnsite,
                                       {.sites = 101, .duration = 0.5, .width = 0.01, .center = 0.05});
  double worst = 0.0;
  const auto& f = res.field.normalized;
  for (int s = 0; s < f.slices(); ++s)
    if (f.valid[s]) worst = std::max(worst, std::abs(f.amplitudes.row(s).squaredNorm() - 1.0));
  return {"norm_contract", worst <= tol, worst, tol, "normalized slices have unit norm"};
}

CheckResult compensation_uniform_loss() {
  // Isolated lossy site: after the pulse the compensated amplitude is constant.
  Eigen::MatrixXcd h(1, 1);
  h(0, 0) = Complex{1040.0, -3.0};
  dynamics::DriveSpec drive;
  drive.duration = 0.5;
  drive.step = 1e-4;
  const auto p = dynamics::compensate_normalize(dynamics::evolve(h, drive), h(0, 0));
  double lo = 1e300, hi = 0.0;
  for (int s = 0; s < p.compensated.slices(); ++s)
    if (p.compensated.times[s] > drive.center + 8 * drive.width) {
      const double a = std::abs(p.compensated.amplitudes(s, 0));
      lo = std::min(lo, a);
      hi = std::max(hi, a);
    }
  const double v = (hi - lo) / hi;
  return {"uniform_loss_compensation", v <= 1e-6, v, 1e-6, "compensated single-site amplitude is flat after the pulse"};
}

CheckResult hermitian_saddle() {
  const auto model = LatticeModel::from_hoppings(
      1, {{{1, 0, 0}, 1.0}, {{-1, 0, 0}, 1.0}, {{2, 0, 0}, 0.4}, {{-2, 0, 0}, 0.4}}, 0.0);
  const double a = dynamics::saddle_growth(model);
  const double b = dynamics::saddle_growth(dynamics::pt_model(0.0, kCalibratedAlpha));
  const double v = std::max(std::abs(a), std::abs(b));
  return {"hermitian_saddle_growth", v <= 1e-9, v, 1e-9, "real symmetric generators give zero saddle growth"};
}

CheckResult reproducibility() {
  auto doc = preset("fig2-gbc");
  doc["sweep"]["g"] = {0.0, 1.0};
  doc["moments"]["m_max"] = 6;
  const auto cfg = parse_config(doc);
  const auto a = render_experiment(cfg, 1);
  const auto b = render_experiment(cfg, 3);
  bool same = a.size() == b.size();
  for (std::size_t i = 0; same && i < a.size(); ++i) same = a[i].path == b[i].path && a[i].content == b[i].content;
  return {"reproducible_outputs", same, same ? 0.0 : 1.0, 0.0, "same config, different worker counts"};
}

}  // namespace

std::vector<CheckResult> run_invariant_suite(const std::map<std::string, double>& tol) {
  auto t = [&](const char* key) { return tol.at(key); };
  std::vector<std::function<CheckResult()>> checks = {
      gbc_endpoints,
      circulant_bloch,
      [&] { return moment_routes(t("route_rel")); },
      [&] { return bulk_oracle(t("bulk_rel")); },
      [&] { return decomposition(t("decomposition_rel")); },
      resolvent_residual,
      [&] { return greens_roundtrip(t("roundtrip_hz")); },
      integrator_order,
      [&] { return norm_contract(t("norm")); },
      compensation_uniform_loss,
      hermitian_saddle,
      reproducibility,
  };
  std::vector<CheckResult> out;
  for (auto& c : checks) {
    try {
      out.push_back(c());
    } catch (const std::exception& e) {
      out.push_back({"error", false, 0.0, 0.0, e.what()});
    }
  }
  return out;
}

}  // namespace momentlab::cli
