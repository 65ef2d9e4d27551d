#pragma once

#include <array>
#include <complex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace momentlab {

using Complex = std::complex<double>;

/// Thrown when inputs violate an operation's preconditions.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a numerical procedure fails (non-convergence, singular shift, overflow).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kMaxDimension = 3;

/// Integer lattice vector; entries beyond the model dimension are zero.
using Coord = std::array<int, kMaxDimension>;

namespace lattice {

struct Hopping {
  Coord delta{};
  Complex amplitude{};
};

/// Translation-invariant single-band model.
///
/// A hopping (delta, A) moves amplitude from site n to site n + delta, so it sits
/// at H[n + delta, n] in real space and contributes A exp(-i k.delta) to the Bloch
/// Hamiltonian. The on-site frequency is kept separate from the hopping table.
class LatticeModel {
 public:
  /// Validates and stores the table. Duplicate displacements are merged by summing
  /// their amplitudes; entries that cancel to exactly zero are dropped.
  static LatticeModel from_hoppings(int dimension, std::vector<Hopping> hoppings, Complex onsite);

  int dimension() const { return dimension_; }
  const std::vector<Hopping>& hoppings() const { return hoppings_; }
  Complex onsite() const { return onsite_; }
  /// Largest infinity-norm of any displacement (0 for an empty table).
  int max_range() const { return max_range_; }
  /// max |A_delta| over the table (0 for an empty table).
  double max_amplitude() const;

  /// Sum_delta A_delta exp(-i k.delta) + onsite.
  Complex bloch(std::span<const double> k) const;

  LatticeModel with_onsite(Complex onsite) const;

 private:
  LatticeModel() = default;
  int dimension_ = 1;
  std::vector<Hopping> hoppings_;
  Complex onsite_{};
  int max_range_ = 0;
};

/// Finite set of occupied sites inside a box, with a removable mask.
///
/// Sites are enumerated lexicographically with axis 0 most significant; the
/// index map is a bijection onto 0..N-1.
class LatticeDomain {
 public:
  static LatticeDomain build(std::vector<int> extents, std::span<const Coord> mask = {});

  int dimension() const { return static_cast<int>(extents_.size()); }
  const std::vector<int>& extents() const { return extents_; }
  int extent(int axis) const { return extents_[axis]; }
  int size() const { return static_cast<int>(sites_.size()); }
  /// Largest extent, used as the linear size L.
  int linear_size() const;
  const Coord& site(int index) const { return sites_[index]; }
  const std::vector<Coord>& sites() const { return sites_; }
  const std::vector<Coord>& mask() const { return mask_; }

  bool in_box(const Coord& c) const;
  /// Index of an occupied site, or nullopt for masked / out-of-box coordinates.
  std::optional<int> index_of(const Coord& c) const;

 private:
  LatticeDomain() = default;
  long box_offset(const Coord& c) const;

  std::vector<int> extents_;
  std::vector<Coord> mask_;
  std::vector<Coord> sites_;
  std::vector<int> box_to_index_;
};

/// Canonical 9x9 letter templates. Bitmap row r is y = r and column c is x = c;
/// '#' keeps a site and '.' removes it. The template is anchored at the origin of
/// the box, so larger boxes keep all sites outside the 9x9 corner.
std::vector<Coord> letter_mask(char letter, std::span<const int> extents);

/// Returns the 9 rows of a letter template (for documentation and snapshots).
std::vector<std::string> letter_bitmap(char letter);

struct Closure {
  enum class Kind { Open, Periodic, Generalized };
  Kind kind = Kind::Open;
  double coupling = 0.0;  // only meaningful for Generalized

  static Closure open() { return {Kind::Open, 0.0}; }
  static Closure periodic() { return {Kind::Periodic, 1.0}; }
  static Closure generalized(double g);

  /// Amplitude factor applied to a hop that wraps across this axis (0 drops it).
  double wrap_factor() const;
  bool wraps() const { return kind != Kind::Open; }
  std::string label() const;
};

struct BoundarySpec {
  std::vector<Closure> axes;

  static BoundarySpec uniform(int dimension, Closure closure);
  static BoundarySpec open(int dimension) { return uniform(dimension, Closure::open()); }
  static BoundarySpec periodic(int dimension) { return uniform(dimension, Closure::periodic()); }
  std::string label() const;
};

struct HamiltonianMatrix {
  Eigen::MatrixXcd matrix;
  LatticeDomain domain;
  Complex onsite{};

  int size() const { return static_cast<int>(matrix.rows()); }
};

/// Target of a hop from `from` by `delta` under `boundary`, with the accumulated
/// wrap factor. Returns nullopt for hops that leave an open axis or land on a
/// masked site.
struct HopTarget {
  int index = 0;
  double factor = 1.0;
};
std::optional<HopTarget> hop_target(const LatticeDomain& domain, const BoundarySpec& boundary,
                                    const Coord& from, const Coord& delta);

HamiltonianMatrix assemble(const LatticeModel& model, const LatticeDomain& domain,
                           const BoundarySpec& boundary);

}  // namespace lattice
}  // namespace momentlab
