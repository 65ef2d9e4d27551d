#include <doctest.h>

#include <sstream>

#include "momentlab/greens.hpp"

using namespace momentlab;
using namespace momentlab::lattice;

namespace {

LatticeModel chain() {
  return LatticeModel::from_hoppings(1, {{{2, 0, 0}, 1.0}, {{-2, 0, 0}, -1.0}, {{1, 0, 0}, 4.0}, {{-1, 0, 0}, 4.0}},
                                     {1038.0, -4.5});
}

LatticeModel square() {
  return LatticeModel::from_hoppings(
      2, {{{1, 0, 0}, {0, 2}}, {{-1, 0, 0}, {0, 2}}, {{1, 1, 0}, 4.0}, {{-1, -1, 0}, 4.0}}, {1040.0, -6.0});
}

greens::Branch scalar_branch(const std::vector<double>& w, Complex e, Complex c) {
  greens::Branch b;
  for (double x : w) b.values.push_back(c / (x - e));
  b.overlaps.assign(w.size() - 1, 1.0);
  return b;
}

}  // namespace

TEST_CASE("uniform grid includes both ends") {
  const auto g = greens::uniform_grid(1030.0, 1050.0, 0.1);
  CHECK(g.size() == 201);
  CHECK(g.front() == 1030.0);
  CHECK(g.back() == doctest::Approx(1050.0).epsilon(1e-14));
  CHECK_THROWS_AS(greens::uniform_grid(1.0, 2.0, 0.0), InvalidArgument);
  CHECK_THROWS_AS(greens::uniform_grid(2.0, 1.0, 0.1), InvalidArgument);
}

TEST_CASE("scalar response") {
  Eigen::MatrixXcd h(1, 1);
  h(0, 0) = Complex(1040, -3);
  const auto grid = greens::uniform_grid(1030.0, 1050.0, 0.1);
  const auto s = greens::synth_response(h, grid);
  REQUIRE(s.size() == static_cast<int>(grid.size()));
  for (int f = 0; f < s.size(); ++f) CHECK(std::abs(s.responses[f](0, 0) - 1.0 / (grid[f] - h(0, 0))) < 1e-15);
  const auto rec = greens::reconstruct_spectrum(s);
  REQUIRE(rec.spectrum.size() == 1);
  CHECK(std::abs(rec.spectrum.eigenvalues[0] - h(0, 0)) < 1e-9);
}

TEST_CASE("noiseless stack satisfies the resolvent identity") {
  const auto h = assemble(chain(), LatticeDomain::build({12}), BoundarySpec::open(1)).matrix;
  const auto s = greens::synth_response(h, greens::uniform_grid(1020.0, 1060.0, 1.0));
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(12, 12);
  for (int f = 0; f < s.size(); ++f)
    CHECK(((Complex(s.frequencies[f]) * id - h) * s.responses[f] - id).norm() < 1e-10);
}

TEST_CASE("noise is seeded and deterministic") {
  const auto h = assemble(chain(), LatticeDomain::build({6}), BoundarySpec::open(1)).matrix;
  const auto grid = greens::uniform_grid(1020.0, 1060.0, 0.5);
  const auto a = greens::synth_response(h, grid, 0.01, 42);
  const auto b = greens::synth_response(h, grid, 0.01, 42);
  const auto c = greens::synth_response(h, grid, 0.01, 43);
  bool same = true, differ = false;
  for (int f = 0; f < a.size(); ++f) {
    same = same && (a.responses[f].array() == b.responses[f].array()).all();
    differ = differ || (a.responses[f].array() != c.responses[f].array()).any();
  }
  CHECK(same);
  CHECK(differ);
  CHECK_THROWS_AS(greens::synth_response(h, grid, -1.0), InvalidArgument);
  CHECK_THROWS_AS(greens::synth_response(h, {1.0, 1.0, 2.0}), InvalidArgument);
}

TEST_CASE("decoupled sites give two clean branches") {
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(2, 2);
  h(0, 0) = Complex(1035, -1);
  h(1, 1) = Complex(1045, -1);
  const auto s = greens::synth_response(h, greens::uniform_grid(1025.0, 1055.0, 0.1));
  const auto branches = greens::track_branches(s);
  REQUIRE(branches.size() == 2);
  for (const auto& b : branches) CHECK_FALSE(b.unresolved_crossing);
  const auto rec = greens::reconstruct_spectrum(s);
  const std::vector<Complex> expect{h(0, 0), h(1, 1)};
  CHECK(linalg::matching_distance(rec.spectrum.eigenvalues, expect) < 1e-6);
}

TEST_CASE("pole fit recovers exact poles independent of the prefactor") {
  const auto w = greens::uniform_grid(1020.0, 1060.0, 0.1);
  const Complex e(1040, -3);
  const auto a = greens::fit_pole(scalar_branch(w, e, 1.0), w);
  const auto b = greens::fit_pole(scalar_branch(w, e, Complex(5, 2)), w);
  CHECK(std::abs(a.eigenvalue - e) < 1e-9);
  CHECK(std::abs(b.eigenvalue - e) < 1e-9);
  CHECK(std::abs(b.prefactor - Complex(5, 2)) < 1e-9);
  CHECK(a.residual < 1e-12);

  const std::vector<double> few{1.0, 2.0, 3.0};
  CHECK_THROWS_AS(greens::fit_pole(scalar_branch(few, e, 1.0), few), InvalidArgument);
  greens::Branch flat;
  flat.values.assign(w.size(), Complex(2.0));
  CHECK_THROWS_AS(greens::fit_pole(flat, w), NumericalError);
  CHECK_THROWS_AS(greens::fit_pole(scalar_branch(w, e, 1.0), few), InvalidArgument);
}

TEST_CASE("chain branches track smoothly over 1010 to 1070 Hz") {
  const auto h = assemble(chain(), LatticeDomain::build({30}), BoundarySpec::open(1)).matrix;
  const auto s = greens::synth_response(h, greens::uniform_grid(1010.0, 1070.0, 0.1));
  const auto branches = greens::track_branches(s);
  CHECK(branches.size() == 30);
  double worst = 1.0;
  for (const auto& b : branches) worst = std::min(worst, b.min_overlap);
  CHECK(worst >= 0.9);
}

TEST_CASE("round trip recovers the spectrum within 0.05 Hz") {
  {
    const auto h = assemble(chain(), LatticeDomain::build({30}), BoundarySpec::open(1)).matrix;
    const auto direct = linalg::eigenvalues(h);
    const auto rec = greens::reconstruct_spectrum(greens::synth_response(h, greens::grid_for_spectrum(direct, 0.1)));
    CHECK(linalg::matching_distance(rec.spectrum.eigenvalues, direct.eigenvalues) <= 0.05);
    for (const auto& p : rec.poles) CHECK_FALSE(p.flagged);
  }
  {
    const auto h = assemble(square(), LatticeDomain::build({8, 8}), BoundarySpec::periodic(2)).matrix;
    const auto direct = linalg::eigenvalues(h);
    const auto rec = greens::reconstruct_spectrum(greens::synth_response(h, greens::grid_for_spectrum(direct, 0.1)));
    CHECK(linalg::matching_distance(rec.spectrum.eigenvalues, direct.eigenvalues) <= 0.05);
  }
}

TEST_CASE("response stack csv round trip") {
  const auto h = assemble(chain(), LatticeDomain::build({4}), BoundarySpec::open(1)).matrix;
  const auto s = greens::synth_response(h, greens::uniform_grid(1030.0, 1046.0, 0.5), 0.02, 7);
  std::stringstream io;
  greens::write_stack_csv(io, s);
  const auto back = greens::read_stack_csv(io);
  REQUIRE(back.size() == s.size());
  CHECK(back.noise == s.noise);
  CHECK(back.seed == s.seed);
  for (int f = 0; f < s.size(); ++f) {
    CHECK(back.frequencies[f] == s.frequencies[f]);
    CHECK((back.responses[f].array() == s.responses[f].array()).all());
  }
  std::stringstream bad("# momentlab response stack, N=2, noise=0, seed=0\n1.0, 2.0\n");
  CHECK_THROWS_AS(greens::read_stack_csv(bad), InvalidArgument);
}
