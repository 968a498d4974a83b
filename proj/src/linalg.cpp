#include "lrange/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace lrange {

Matrix matpow(const Matrix& m, unsigned k) {
  if (!m.is_square()) throw std::invalid_argument("matpow: matrix is " + shape_string(m));
  Matrix result = Matrix::identity(m.rows());
  Matrix base = m;
  bool first = true;
  while (k > 0) {
    if (k & 1u) {
      result = first ? base : matmul(result, base);
      first = false;
    }
    k >>= 1u;
    if (k > 0) base = matmul(base, base);
  }
  return result;
}

bool is_symmetric(const Matrix& m, double rel_tol) {
  if (!m.is_square()) return false;
  const double scale = std::max(1.0, m.max_abs());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i + 1; j < m.cols(); ++j)
      if (std::abs(m(i, j) - m(j, i)) > rel_tol * scale) return false;
  return true;
}

EigenDecomposition sym_eigen(const Matrix& m, double tol, int max_sweeps) {
  if (!m.is_square()) throw std::invalid_argument("sym_eigen: matrix is " + shape_string(m));
  if (!is_symmetric(m, 1e-10)) throw std::invalid_argument("sym_eigen: matrix is not symmetric");
  const std::size_t n = m.rows();
  Matrix a = m;
  // exact symmetry so the rotations below can touch only the upper triangle
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) a(j, i) = a(i, j) = 0.5 * (a(i, j) + a(j, i));
  Matrix v = Matrix::identity(n);
  const double threshold = tol * std::max(m.max_abs(), 1e-300);

  auto off_max = [&] {
    double mx = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) mx = std::max(mx, std::abs(a(i, j)));
    return mx;
  };

  int sweep = 0;
  while (off_max() >= threshold) {
    if (sweep++ >= max_sweeps) {
      throw NumericalError("sym_eigen: no convergence after " + std::to_string(max_sweeps) +
                           " sweeps (n = " + std::to_string(n) + ")");
    }
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) < threshold * 1e-3) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });
  EigenDecomposition out;
  out.eigenvalues.resize(n);
  out.eigenvectors = Matrix(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    out.eigenvalues[c] = a(order[c], order[c]);
    for (std::size_t r = 0; r < n; ++r) out.eigenvectors(r, c) = v(r, order[c]);
  }
  return out;
}

PseudoInverse pseudo_inverse_with_kernel(const Matrix& m, double rank_tol) {
  const auto eig = sym_eigen(m);
  const std::size_t n = m.rows();
  const double lambda_max =
      eig.eigenvalues.empty() ? 0.0
                              : std::max(std::abs(eig.eigenvalues.front()), std::abs(eig.eigenvalues.back()));
  const double cutoff = rank_tol * lambda_max;
  PseudoInverse out;
  out.inverse = Matrix(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    const double lambda = eig.eigenvalues[c];
    if (lambda < -cutoff) {
      throw NumericalError("pseudo_inverse: eigenvalue " + std::to_string(lambda) +
                           " below -rank_tol * lambda_max; input is not PSD");
    }
    if (lambda <= cutoff) {
      ++out.kernel_dim;
      continue;
    }
    const double inv = 1.0 / lambda;
    for (std::size_t i = 0; i < n; ++i) {
      const double qi = eig.eigenvectors(i, c) * inv;
      if (qi == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) out.inverse(i, j) += qi * eig.eigenvectors(j, c);
    }
  }
  // symmetric by construction up to rounding; pin it exactly
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      out.inverse(j, i) = out.inverse(i, j) = 0.5 * (out.inverse(i, j) + out.inverse(j, i));
  return out;
}

Matrix pseudo_inverse(const Matrix& m, double rank_tol) {
  return pseudo_inverse_with_kernel(m, rank_tol).inverse;
}

}  // namespace lrange
