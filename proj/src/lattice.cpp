#include "momentlab/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace momentlab::lattice {

namespace {

std::string coord_string(const Coord& c, int dimension) {
  std::ostringstream os;
  os << '(';
  for (int a = 0; a < dimension; ++a) os << (a ? "," : "") << c[a];
  os << ')';
  return os.str();
}

int floor_mod(int value, int modulus) {
  int r = value % modulus;
  return r < 0 ? r + modulus : r;
}

}  // namespace

LatticeModel LatticeModel::from_hoppings(int dimension, std::vector<Hopping> hoppings,
                                         Complex onsite) {
  if (dimension < 1 || dimension > kMaxDimension)
    throw InvalidArgument("model dimension must be 1, 2 or 3, got " + std::to_string(dimension));
  if (!std::isfinite(onsite.real()) || !std::isfinite(onsite.imag()))
    throw InvalidArgument("on-site frequency must be finite");

  std::map<Coord, Complex> merged;
  std::vector<Coord> order;
  for (const auto& h : hoppings) {
    for (int a = dimension; a < kMaxDimension; ++a)
      if (h.delta[a] != 0)
        throw InvalidArgument("displacement " + coord_string(h.delta, kMaxDimension) +
                              " has components beyond dimension " + std::to_string(dimension));
    bool zero = std::all_of(h.delta.begin(), h.delta.end(), [](int v) { return v == 0; });
    if (zero) throw InvalidArgument("zero displacement in hopping table; use the on-site term");
    if (!std::isfinite(h.amplitude.real()) || !std::isfinite(h.amplitude.imag()))
      throw InvalidArgument("hopping amplitude for " + coord_string(h.delta, dimension) +
                            " is not finite");
    auto [it, inserted] = merged.try_emplace(h.delta, Complex{});
    if (inserted) order.push_back(h.delta);
    it->second += h.amplitude;
  }

  LatticeModel model;
  model.dimension_ = dimension;
  model.onsite_ = onsite;
  for (const auto& d : order) {
    Complex amp = merged[d];
    if (amp == Complex{}) continue;
    model.hoppings_.push_back({d, amp});
    for (int a = 0; a < dimension; ++a) model.max_range_ = std::max(model.max_range_, std::abs(d[a]));
  }
  return model;
}

double LatticeModel::max_amplitude() const {
  double m = 0.0;
  for (const auto& h : hoppings_) m = std::max(m, std::abs(h.amplitude));
  return m;
}

Complex LatticeModel::bloch(std::span<const double> k) const {
  if (static_cast<int>(k.size()) != dimension_)
    throw InvalidArgument("momentum has " + std::to_string(k.size()) + " components, model has " +
                          std::to_string(dimension_));
  Complex value = onsite_;
  for (const auto& h : hoppings_) {
    double phase = 0.0;
    for (int a = 0; a < dimension_; ++a) phase += k[a] * h.delta[a];
    value += h.amplitude * std::polar(1.0, -phase);
  }
  return value;
}

LatticeModel LatticeModel::with_onsite(Complex onsite) const {
  LatticeModel copy = *this;
  copy.onsite_ = onsite;
  return copy;
}

LatticeDomain LatticeDomain::build(std::vector<int> extents, std::span<const Coord> mask) {
  if (extents.empty() || static_cast<int>(extents.size()) > kMaxDimension)
    throw InvalidArgument("domain needs 1 to 3 extents");
  long volume = 1;
  for (int L : extents) {
    if (L <= 0) throw InvalidArgument("domain extents must be positive");
    volume *= L;
  }

  LatticeDomain domain;
  domain.extents_ = std::move(extents);
  const int d = domain.dimension();
  std::vector<char> removed(volume, 0);
  for (const auto& c : mask) {
    for (int a = d; a < kMaxDimension; ++a)
      if (c[a] != 0) throw InvalidArgument("mask site " + coord_string(c, kMaxDimension) + " has extra components");
    if (!domain.in_box(c))
      throw InvalidArgument("mask site " + coord_string(c, d) + " lies outside the extents");
    long off = domain.box_offset(c);
    if (!removed[off]) {
      removed[off] = 1;
      domain.mask_.push_back(c);
    }
  }
  std::sort(domain.mask_.begin(), domain.mask_.end());

  domain.box_to_index_.assign(volume, -1);
  Coord c{};
  for (long off = 0; off < volume; ++off) {
    long rem = off;
    for (int a = d - 1; a >= 0; --a) {
      c[a] = static_cast<int>(rem % domain.extents_[a]);
      rem /= domain.extents_[a];
    }
    if (removed[off]) continue;
    domain.box_to_index_[off] = static_cast<int>(domain.sites_.size());
    domain.sites_.push_back(c);
  }
  if (domain.sites_.empty()) throw InvalidArgument("domain is fully masked (N = 0)");
  return domain;
}

int LatticeDomain::linear_size() const { return *std::max_element(extents_.begin(), extents_.end()); }

bool LatticeDomain::in_box(const Coord& c) const {
  for (int a = 0; a < dimension(); ++a)
    if (c[a] < 0 || c[a] >= extents_[a]) return false;
  return true;
}

long LatticeDomain::box_offset(const Coord& c) const {
  long off = 0;
  for (int a = 0; a < dimension(); ++a) off = off * extents_[a] + c[a];
  return off;
}

std::optional<int> LatticeDomain::index_of(const Coord& c) const {
  if (!in_box(c)) return std::nullopt;
  int idx = box_to_index_[box_offset(c)];
  if (idx < 0) return std::nullopt;
  return idx;
}

std::vector<std::string> letter_bitmap(char letter) {
  switch (letter) {
    case 'P':
      return {"#######..",
              "########.",
              "###..####",
              "###..####",
              "########.",
              "#######..",
              "###......",
              "###......",
              "###......"};
    case 'M':
      return {"###...###",
              "####.####",
              "#########",
              "#########",
              "###.#.###",
              "###...###",
              "###...###",
              "###...###",
              "###...###"};
    default:
      throw InvalidArgument(std::string("unsupported letter mask '") + letter + "' (expected P or M)");
  }
}

std::vector<Coord> letter_mask(char letter, std::span<const int> extents) {
  auto rows = letter_bitmap(letter);
  if (extents.size() != 2 || extents[0] < 9 || extents[1] < 9)
    throw InvalidArgument("letter masks need 2D extents of at least 9x9");
  std::vector<Coord> mask;
  for (int y = 0; y < 9; ++y)
    for (int x = 0; x < 9; ++x)
      if (rows[y][x] == '.') mask.push_back({x, y, 0});
  return mask;
}

Closure Closure::generalized(double g) {
  if (!(g >= 0.0) || !std::isfinite(g)) throw InvalidArgument("GBC coupling g must be finite and >= 0");
  return {Kind::Generalized, g};
}

double Closure::wrap_factor() const {
  switch (kind) {
    case Kind::Open: return 0.0;
    case Kind::Periodic: return 1.0;
    case Kind::Generalized: return coupling;
  }
  return 0.0;
}

std::string Closure::label() const {
  switch (kind) {
    case Kind::Open: return "obc";
    case Kind::Periodic: return "pbc";
    case Kind::Generalized: {
      std::ostringstream os;
      os << "gbc(" << coupling << ")";
      return os.str();
    }
  }
  return "?";
}

BoundarySpec BoundarySpec::uniform(int dimension, Closure closure) {
  return BoundarySpec{std::vector<Closure>(dimension, closure)};
}

std::string BoundarySpec::label() const {
  std::string s;
  for (std::size_t a = 0; a < axes.size(); ++a) s += (a ? "-" : "") + axes[a].label();
  return s;
}

std::optional<HopTarget> hop_target(const LatticeDomain& domain, const BoundarySpec& boundary,
                                    const Coord& from, const Coord& delta) {
  Coord to{};
  double factor = 1.0;
  for (int a = 0; a < domain.dimension(); ++a) {
    int x = from[a] + delta[a];
    int L = domain.extent(a);
    if (x < 0 || x >= L) {
      const Closure& cl = boundary.axes[a];
      if (!cl.wraps()) return std::nullopt;
      factor *= cl.wrap_factor();
      x = floor_mod(x, L);
    }
    to[a] = x;
  }
  auto idx = domain.index_of(to);
  if (!idx) return std::nullopt;
  return HopTarget{*idx, factor};
}

HamiltonianMatrix assemble(const LatticeModel& model, const LatticeDomain& domain,
                           const BoundarySpec& boundary) {
  if (model.dimension() != domain.dimension())
    throw InvalidArgument("model dimension " + std::to_string(model.dimension()) +
                          " does not match domain dimension " + std::to_string(domain.dimension()));
  if (static_cast<int>(boundary.axes.size()) != domain.dimension())
    throw InvalidArgument("boundary needs one closure per axis");

  const int n = domain.size();
  HamiltonianMatrix h{Eigen::MatrixXcd::Zero(n, n), domain, model.onsite()};
  for (int j = 0; j < n; ++j) {
    const Coord& from = domain.site(j);
    for (const auto& hop : model.hoppings()) {
      auto target = hop_target(domain, boundary, from, hop.delta);
      if (!target) continue;
      h.matrix(target->index, j) += target->factor * hop.amplitude;
    }
  }
  for (int i = 0; i < n; ++i) h.matrix(i, i) += model.onsite();
  return h;
}

}  // namespace momentlab::lattice
