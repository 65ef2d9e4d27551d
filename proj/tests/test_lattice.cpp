#include <doctest.h>

#include <numbers>
#include <random>

#include "momentlab/dynamics.hpp"
#include "momentlab/lattice.hpp"
#include "oracles.hpp"

using namespace momentlab;
using namespace momentlab::lattice;

namespace {

LatticeModel chain(double kp = 1.0, double km = -1.0, double k = 4.0) {
  return LatticeModel::from_hoppings(1, {{{2, 0, 0}, kp}, {{-2, 0, 0}, km}, {{1, 0, 0}, k}, {{-1, 0, 0}, k}},
                                     {1038.0, -4.5});
}

LatticeModel square() {
  return LatticeModel::from_hoppings(
      2, {{{1, 0, 0}, {0, 2}}, {{-1, 0, 0}, {0, 2}}, {{1, 1, 0}, 4.0}, {{-1, -1, 0}, 4.0}}, {1040.0, -6.0});
}

Complex at(const LatticeModel& m, std::vector<double> k) { return m.bloch(k); }

std::vector<oracle::Hop> as_oracle(const LatticeModel& m) {
  std::vector<oracle::Hop> out;
  for (const auto& h : m.hoppings())
    out.push_back({std::vector<int>(h.delta.begin(), h.delta.begin() + m.dimension()), h.amplitude});
  return out;
}

}  // namespace

TEST_CASE("bloch values of the reference models") {
  const auto m = chain();
  CHECK(std::abs(at(m, {0.0}) - Complex(1046.0, -4.5)) < 1e-12);
  const double k = 0.37;
  const Complex expected = std::exp(Complex(0, -2 * k)) - std::exp(Complex(0, 2 * k)) + 8.0 * std::cos(k) +
                           Complex(1038.0, -4.5);
  CHECK(std::abs(at(m, {k}) - expected) < 1e-12);

  const auto onsite_only = LatticeModel::from_hoppings(1, {}, 5.0);
  for (double q : {0.0, 1.0, 2.5}) CHECK(at(onsite_only, {q}) == Complex(5.0));

  CHECK(std::abs(at(square(), {0.0, 0.0}) - (Complex(1040.0, -6.0) + Complex(0, 4) + 8.0)) < 1e-12);
}

TEST_CASE("bloch function is 2 pi periodic along every axis") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int d = 1; d <= 3; ++d) {
    auto hops = oracle::random_hops(rng, d, 5, 2);
    std::vector<Hopping> table;
    for (const auto& h : hops) {
      Coord c{};
      for (int a = 0; a < d; ++a) c[a] = h.delta[a];
      table.push_back({c, h.amp});
    }
    const auto m = LatticeModel::from_hoppings(d, table, {3.0, -1.0});
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<double> k(d);
      for (auto& x : k) x = u(rng);
      for (int a = 0; a < d; ++a) {
        auto k2 = k;
        k2[a] += 2 * std::numbers::pi;
        CHECK(std::abs(at(m, k) - at(m, k2)) < 1e-10);
      }
    }
  }
}

TEST_CASE("PT model at gamma = 0 is real up to the on-site term") {
  const auto m = dynamics::pt_model(0.0, 0.2);
  for (double k : {0.0, 0.4, 1.3, 2.9}) CHECK(std::abs((at(m, {k}) - m.onsite()).imag()) < 1e-12);
}

TEST_CASE("hopping table validation") {
  CHECK_THROWS_AS(LatticeModel::from_hoppings(1, {{{0, 0, 0}, 1.0}}, 0.0), InvalidArgument);
  CHECK_THROWS_AS(LatticeModel::from_hoppings(1, {{{1, 1, 0}, 1.0}}, 0.0), InvalidArgument);
  CHECK_THROWS_AS(LatticeModel::from_hoppings(4, {}, 0.0), InvalidArgument);
  CHECK_THROWS_AS(LatticeModel::from_hoppings(1, {{{1, 0, 0}, {NAN, 0}}}, 0.0), InvalidArgument);
  CHECK_THROWS_AS(LatticeModel::from_hoppings(1, {}, {INFINITY, 0}), InvalidArgument);
  // duplicates merge
  const auto m = LatticeModel::from_hoppings(1, {{{1, 0, 0}, 1.0}, {{1, 0, 0}, 2.0}}, 0.0);
  REQUIRE(m.hoppings().size() == 1);
  CHECK(m.hoppings()[0].amplitude == Complex(3.0));
}

TEST_CASE("domain sizes and letter templates") {
  CHECK(LatticeDomain::build({30}).size() == 30);
  CHECK(LatticeDomain::build({9, 9}).size() == 81);
  const std::vector<int> ext{9, 9};
  const auto p = LatticeDomain::build(ext, letter_mask('P', ext));
  const auto mm = LatticeDomain::build(ext, letter_mask('M', ext));
  CHECK(p.size() == 53);
  CHECK(mm.size() == 63);
  const std::vector<int> small{8, 8};
  CHECK_THROWS_AS(letter_mask('P', small), InvalidArgument);
  CHECK_THROWS_AS(letter_mask('Q', ext), InvalidArgument);

  // snapshot of the canonical templates
  CHECK(letter_bitmap('P') == std::vector<std::string>{"#######..", "########.", "###..####", "###..####",
                                                      "########.", "#######..", "###......", "###......",
                                                      "###......"});
  CHECK(letter_bitmap('M') == std::vector<std::string>{"###...###", "####.####", "#########", "#########",
                                                      "###.#.###", "###...###", "###...###", "###...###",
                                                      "###...###"});
}

TEST_CASE("domain index map is a bijection in lexicographic order") {
  const std::vector<int> ext{9, 9};
  const auto d = LatticeDomain::build(ext, letter_mask('M', ext));
  Coord prev{-1, -1, -1};
  for (int i = 0; i < d.size(); ++i) {
    const auto& c = d.site(i);
    CHECK(d.index_of(c) == i);
    CHECK(prev < c);
    prev = c;
  }
  for (const auto& c : d.mask()) CHECK_FALSE(d.index_of(c).has_value());
  CHECK_FALSE(d.index_of({9, 0, 0}).has_value());
}

TEST_CASE("domain validation") {
  CHECK_THROWS_AS(LatticeDomain::build({}), InvalidArgument);
  CHECK_THROWS_AS(LatticeDomain::build({0}), InvalidArgument);
  const std::vector<Coord> outside{{5, 0, 0}};
  CHECK_THROWS_AS(LatticeDomain::build({3}, outside), InvalidArgument);
  const std::vector<Coord> all{{0, 0, 0}, {1, 0, 0}};
  CHECK_THROWS_AS(LatticeDomain::build({2}, all), InvalidArgument);
  CHECK_THROWS_AS(Closure::generalized(-0.1), InvalidArgument);
  CHECK_THROWS_AS(assemble(chain(), LatticeDomain::build({4, 4}), BoundarySpec::open(2)), InvalidArgument);
  CHECK_THROWS_AS(assemble(square(), LatticeDomain::build({4, 4}), BoundarySpec::open(1)), InvalidArgument);
}

TEST_CASE("assembly places A_delta at row n + delta, column n") {
  const auto h = assemble(chain(), LatticeDomain::build({30}), BoundarySpec::open(1)).matrix;
  CHECK(h(2, 0) == Complex(1.0));
  CHECK(h(0, 2) == Complex(-1.0));
  CHECK(h(1, 0) == Complex(4.0));
  for (int i = 0; i < 30; ++i) CHECK(h(i, i) == Complex(1038.0, -4.5));
  CHECK(h(29, 0) == Complex(0.0));

  const auto one = assemble(chain(), LatticeDomain::build({1}), BoundarySpec::periodic(1)).matrix;
  REQUIRE(one.rows() == 1);
  // on a single-site ring every hop wraps onto the site itself
  CHECK(one(0, 0) == Complex(1038.0 + 1.0 - 1.0 + 8.0, -4.5));
  const auto one_open = assemble(chain(), LatticeDomain::build({1}), BoundarySpec::open(1)).matrix;
  CHECK(one_open(0, 0) == Complex(1038.0, -4.5));
}

TEST_CASE("GBC interpolates entrywise between OBC and PBC") {
  const auto d = LatticeDomain::build({30});
  const auto obc = assemble(chain(), d, BoundarySpec::open(1)).matrix;
  const auto pbc = assemble(chain(), d, BoundarySpec::periodic(1)).matrix;
  CHECK((assemble(chain(), d, BoundarySpec::uniform(1, Closure::generalized(1.0))).matrix - pbc).norm() == 0.0);
  CHECK((assemble(chain(), d, BoundarySpec::uniform(1, Closure::generalized(0.0))).matrix - obc).norm() == 0.0);
  const auto half = assemble(chain(), d, BoundarySpec::uniform(1, Closure::generalized(0.5))).matrix;
  for (int r = 0; r < 30; ++r)
    for (int c = 0; c < 30; ++c) {
      if (obc(r, c) != pbc(r, c)) {
        CHECK(half(r, c) == 0.5 * pbc(r, c));
      } else {
        CHECK(half(r, c) == obc(r, c));
      }
    }
}

TEST_CASE("assembly agrees with an independent transcription") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> gdist(0.0, 2.0);
  for (int trial = 0; trial < 30; ++trial) {
    const int d = 1 + trial % 3;
    std::vector<int> ext(d);
    for (auto& e : ext) e = 2 + static_cast<int>(rng() % (d == 3 ? 3 : 6));
    auto hops = oracle::random_hops(rng, d, 4, 2);
    std::vector<Hopping> table;
    for (const auto& h : hops) {
      Coord c{};
      for (int a = 0; a < d; ++a) c[a] = h.delta[a];
      table.push_back({c, h.amp});
    }
    const auto model = LatticeModel::from_hoppings(d, table, {2.0, -0.5});
    std::vector<Closure> closures;
    std::vector<oracle::Axis> axes;
    for (int a = 0; a < d; ++a) {
      switch (rng() % 3) {
        case 0: closures.push_back(Closure::open()); axes.push_back({'o', 0}); break;
        case 1: closures.push_back(Closure::periodic()); axes.push_back({'p', 1}); break;
        default: {
          const double g = gdist(rng);
          closures.push_back(Closure::generalized(g));
          axes.push_back({'g', g});
        }
      }
    }
    std::vector<Coord> mask;
    std::set<oracle::Site> removed;
    if (trial % 2) {
      Coord c{};
      oracle::Site s(d);
      for (int a = 0; a < d; ++a) c[a] = s[a] = static_cast<int>(rng() % ext[a]);
      mask.push_back(c);
      removed.insert(s);
    }
    const auto dom = LatticeDomain::build(ext, mask);
    const auto ours = assemble(model, dom, BoundarySpec{closures}).matrix;
    const auto ref = oracle::assemble(ext, removed, as_oracle(model), model.onsite(), axes);
    CHECK((ours - ref).norm() <= 1e-13 * (1.0 + ref.norm()));
  }
}

TEST_CASE("PT model at gamma = 0 assembles a complex-symmetric matrix with real hoppings") {
  const auto h = assemble(dynamics::pt_model(0.0, 0.19), LatticeDomain::build({25}), BoundarySpec::open(1)).matrix;
  CHECK((h - h.transpose()).norm() == 0.0);
  Eigen::MatrixXcd off = h;
  off.diagonal().setZero();
  CHECK(off.imag().norm() == 0.0);
}
