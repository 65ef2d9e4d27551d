#pragma once

#include <span>
#include <string>
#include <vector>

#include "momentlab/lattice.hpp"

namespace momentlab::linalg {

struct ComplexSpectrum {
  std::vector<Complex> eigenvalues;
  std::string source;

  int size() const { return static_cast<int>(eigenvalues.size()); }
};

/// All N eigenvalues of a dense general complex matrix (Hessenberg reduction
/// followed by shifted QR, via Eigen). Throws NumericalError on non-convergence.
ComplexSpectrum eigenvalues(const Eigen::MatrixXcd& h, std::string source = {});
ComplexSpectrum eigenvalues(const lattice::HamiltonianMatrix& h, std::string source = {});

/// Eigenvalues together with unit-norm right eigenvectors (columns).
struct EigenDecomposition {
  Eigen::VectorXcd values;
  Eigen::MatrixXcd vectors;
};
EigenDecomposition eigen_decompose(const Eigen::MatrixXcd& h);

/// (omega I - H)^{-1}. Throws NumericalError when the shift is numerically
/// singular; the message carries the reciprocal condition estimate.
Eigen::MatrixXcd resolvent(const Eigen::MatrixXcd& h, Complex omega);

/// Tr[(H - shift I)^m] by repeated dense multiplication; m = 0 gives N.
/// Supported for 0 <= m <= 20 (see kMaxPowerOrder).
inline constexpr int kMaxPowerOrder = 20;
Complex shifted_power_trace(const Eigen::MatrixXcd& h, Complex shift, int m);

/// All traces Tr[(H - shift)^m] for m = 0..m_max in one pass.
std::vector<Complex> shifted_power_traces(const Eigen::MatrixXcd& h, Complex shift, int m_max);

double infinity_norm(const Eigen::MatrixXcd& h);

/// Minimum-cost perfect assignment for a square cost matrix (Hungarian method).
/// Returns assignment[row] = column.
std::vector<int> min_cost_assignment(const Eigen::MatrixXd& cost);

/// Optimal one-to-one matching between two equally sized point sets (minimising
/// the summed distance); returns the largest matched distance.
double matching_distance(std::span<const Complex> a, std::span<const Complex> b);

/// Symmetric Hausdorff distance between two point sets in the complex plane.
double hausdorff_distance(std::span<const Complex> a, std::span<const Complex> b);

}  // namespace momentlab::linalg
