#include "momentlab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace momentlab::linalg {

namespace {

void require_square_finite(const Eigen::MatrixXcd& h) {
  if (h.rows() != h.cols()) throw InvalidArgument("matrix must be square");
  if (h.rows() == 0) throw InvalidArgument("matrix must be at least 1x1");
  if (!h.allFinite()) throw InvalidArgument("matrix has non-finite entries");
}

}  // namespace

ComplexSpectrum eigenvalues(const Eigen::MatrixXcd& h, std::string source) {
  require_square_finite(h);
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(h, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success)
    throw NumericalError("eigenvalue iteration did not converge for " + std::to_string(h.rows()) +
                         "x" + std::to_string(h.rows()) + " matrix");
  ComplexSpectrum s;
  s.source = std::move(source);
  s.eigenvalues.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + h.rows());
  return s;
}

ComplexSpectrum eigenvalues(const lattice::HamiltonianMatrix& h, std::string source) {
  return eigenvalues(h.matrix, std::move(source));
}

EigenDecomposition eigen_decompose(const Eigen::MatrixXcd& h) {
  require_square_finite(h);
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(h, true);
  if (solver.info() != Eigen::Success) throw NumericalError("eigen decomposition did not converge");
  EigenDecomposition d{solver.eigenvalues(), solver.eigenvectors()};
  for (Eigen::Index j = 0; j < d.vectors.cols(); ++j) d.vectors.col(j).normalize();
  return d;
}

Eigen::MatrixXcd resolvent(const Eigen::MatrixXcd& h, Complex omega) {
  require_square_finite(h);
  const Eigen::Index n = h.rows();
  Eigen::MatrixXcd shifted = -h;
  shifted.diagonal().array() += omega;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(shifted);
  double rcond = lu.rcond();
  if (!(rcond > 1e3 * std::numeric_limits<double>::epsilon())) {
    std::ostringstream os;
    os << "resolvent shift " << omega << " is numerically singular (rcond ~ " << rcond << ")";
    throw NumericalError(os.str());
  }
  Eigen::MatrixXcd x = lu.solve(Eigen::MatrixXcd::Identity(n, n));
  // One step of iterative refinement keeps the residual at the 1e-10 ||H|| level
  // for moderately conditioned shifts.
  Eigen::MatrixXcd residual = Eigen::MatrixXcd::Identity(n, n) - shifted * x;
  x += lu.solve(residual);
  return x;
}

std::vector<Complex> shifted_power_traces(const Eigen::MatrixXcd& h, Complex shift, int m_max) {
  require_square_finite(h);
  if (m_max < 0) throw InvalidArgument("power order must be non-negative");
  if (m_max > kMaxPowerOrder)
    throw InvalidArgument("power order " + std::to_string(m_max) + " exceeds supported maximum " +
                          std::to_string(kMaxPowerOrder));
  const Eigen::Index n = h.rows();
  Eigen::MatrixXcd s = h;
  s.diagonal().array() -= shift;

  std::vector<Complex> traces(m_max + 1);
  traces[0] = static_cast<double>(n);
  if (m_max == 0) return traces;
  Eigen::MatrixXcd power = s;
  traces[1] = power.trace();
  for (int m = 2; m <= m_max; ++m) {
    if (m == m_max) {
      // Tr(P S) without forming the product.
      traces[m] = power.cwiseProduct(s.transpose()).sum();
      break;
    }
    power = power * s;
    traces[m] = power.trace();
  }
  for (const auto& t : traces)
    if (!std::isfinite(t.real()) || !std::isfinite(t.imag()))
      throw NumericalError("matrix power trace overflowed");
  return traces;
}

Complex shifted_power_trace(const Eigen::MatrixXcd& h, Complex shift, int m) {
  return shifted_power_traces(h, shift, m).back();
}

double infinity_norm(const Eigen::MatrixXcd& h) {
  return h.cwiseAbs().rowwise().sum().maxCoeff();
}

std::vector<int> min_cost_assignment(const Eigen::MatrixXd& cost) {
  // Jonker-Volgenant style O(n^3) Hungarian method with potentials.
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw InvalidArgument("assignment cost matrix must be square");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      int i0 = p[j0], j1 = 0;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> assignment(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] > 0) assignment[p[j] - 1] = j - 1;
  return assignment;
}

double matching_distance(std::span<const Complex> a, std::span<const Complex> b) {
  if (a.size() != b.size()) throw InvalidArgument("matching needs equally sized sets");
  const int n = static_cast<int>(a.size());
  if (n == 0) return 0.0;
  Eigen::MatrixXd cost(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) cost(i, j) = std::abs(a[i] - b[j]);
  auto assign = min_cost_assignment(cost);
  double worst = 0.0;
  for (int i = 0; i < n; ++i) worst = std::max(worst, cost(i, assign[i]));
  return worst;
}

double hausdorff_distance(std::span<const Complex> a, std::span<const Complex> b) {
  if (a.empty() || b.empty()) throw InvalidArgument("Hausdorff distance needs nonempty sets");
  auto directed = [](std::span<const Complex> x, std::span<const Complex> y) {
    double worst = 0.0;
    for (const auto& p : x) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : y) best = std::min(best, std::abs(p - q));
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

}  // namespace momentlab::linalg
