#include "momentlab/laurent.hpp"

#include <algorithm>
#include <cmath>

namespace momentlab::moments {

LaurentPolynomial::LaurentPolynomial(int dimension, int radius)
    : dimension_(dimension), radius_(radius), width_(2 * radius + 1) {
  if (dimension < 1 || dimension > kMaxDimension) throw InvalidArgument("bad Laurent dimension");
  if (radius < 0) throw InvalidArgument("negative Laurent radius");
  long size = 1;
  for (int a = 0; a < dimension; ++a) size *= width_;
  coeffs_.assign(size, Complex{});
}

LaurentPolynomial LaurentPolynomial::generator(const lattice::LatticeModel& model, bool include_onsite) {
  LaurentPolynomial p(model.dimension(), model.max_range());
  for (const auto& h : model.hoppings()) p.add(h.delta, h.amplitude);
  if (include_onsite) p.add(Coord{}, model.onsite());
  return p;
}

bool LaurentPolynomial::inside(const Coord& e, int radius) const {
  for (int a = 0; a < dimension_; ++a)
    if (std::abs(e[a]) > radius) return false;
  return true;
}

long LaurentPolynomial::offset(const Coord& e) const {
  long off = 0;
  for (int a = 0; a < dimension_; ++a) off = off * width_ + (e[a] + radius_);
  return off;
}

Complex LaurentPolynomial::coefficient(const Coord& e) const {
  if (!inside(e, radius_)) return {};
  return coeffs_[offset(e)];
}

void LaurentPolynomial::add(const Coord& e, Complex value) {
  if (!inside(e, radius_)) throw InvalidArgument("exponent outside Laurent table");
  coeffs_[offset(e)] += value;
}

LaurentPolynomial LaurentPolynomial::multiply(const LaurentPolynomial& other, int keep_radius) const {
  if (other.dimension_ != dimension_) throw InvalidArgument("Laurent dimension mismatch");
  const int r = std::min(keep_radius, radius_ + other.radius_);
  LaurentPolynomial out(dimension_, std::max(r, 0));

  // Collect the nonzero terms of both factors; generators are sparse.
  auto terms = [](const LaurentPolynomial& p) {
    std::vector<std::pair<Coord, Complex>> t;
    const long n = static_cast<long>(p.coeffs_.size());
    for (long off = 0; off < n; ++off) {
      if (p.coeffs_[off] == Complex{}) continue;
      Coord e{};
      long rem = off;
      for (int a = p.dimension_ - 1; a >= 0; --a) {
        e[a] = static_cast<int>(rem % p.width_) - p.radius_;
        rem /= p.width_;
      }
      t.emplace_back(e, p.coeffs_[off]);
    }
    return t;
  };
  const auto lhs = terms(*this);
  const auto rhs = terms(other);
  for (const auto& [ea, ca] : lhs) {
    for (const auto& [eb, cb] : rhs) {
      Coord e{};
      for (int a = 0; a < dimension_; ++a) e[a] = ea[a] + eb[a];
      if (!out.inside(e, out.radius_)) continue;
      out.coeffs_[out.offset(e)] += ca * cb;
    }
  }
  return out;
}

std::vector<Complex> constant_terms_of_powers(const LaurentPolynomial& p, int m_max) {
  if (m_max < 0) throw InvalidArgument("negative power order");
  std::vector<Complex> out(m_max + 1);
  out[0] = 1.0;
  LaurentPolynomial power(p.dimension(), 0);
  power.add(Coord{}, 1.0);
  const int range = p.radius();
  for (int m = 1; m <= m_max; ++m) {
    // Exponents farther than (m_max - m) * range cannot return to zero in the
    // remaining multiplications.
    power = power.multiply(p, (m_max - m) * range);
    out[m] = power.constant_term();
    if (!std::isfinite(out[m].real()) || !std::isfinite(out[m].imag()))
      throw NumericalError("Laurent coefficient overflow at order " + std::to_string(m));
  }
  return out;
}

}  // namespace momentlab::moments
