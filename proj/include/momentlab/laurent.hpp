#pragma once

#include <vector>

#include "momentlab/lattice.hpp"

namespace momentlab::moments {

/// Multivariate Laurent polynomial sum_e c_e z^e stored as a dense coefficient
/// table over the cube |e|_inf <= radius.
class LaurentPolynomial {
 public:
  LaurentPolynomial(int dimension, int radius);

  /// sum_delta A_delta z^delta (+ onsite z^0 when requested).
  static LaurentPolynomial generator(const lattice::LatticeModel& model, bool include_onsite = false);

  int dimension() const { return dimension_; }
  int radius() const { return radius_; }
  Complex coefficient(const Coord& exponent) const;
  Complex constant_term() const { return coefficient(Coord{}); }
  void add(const Coord& exponent, Complex value);

  /// Product with `other`, keeping only exponents with |e|_inf <= keep_radius.
  LaurentPolynomial multiply(const LaurentPolynomial& other, int keep_radius) const;

 private:
  long offset(const Coord& e) const;
  bool inside(const Coord& e, int radius) const;

  int dimension_;
  int radius_;
  int width_;
  std::vector<Complex> coeffs_;
};

/// Constant terms of p^m for m = 0..m_max, via iterated truncated convolution.
std::vector<Complex> constant_terms_of_powers(const LaurentPolynomial& p, int m_max);

}  // namespace momentlab::moments
