#pragma once

#include <stdexcept>
#include <vector>

#include "lrange/matrix.hpp"

namespace lrange {

/// Raised when an iterative routine fails to converge or a numerical
/// precondition (e.g. positive semidefiniteness) is violated.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EigenDecomposition {
  std::vector<double> eigenvalues;  // descending
  Matrix eigenvectors;              // column i pairs with eigenvalues[i]
};

/// M^k by repeated squaring; M^0 = I.
Matrix matpow(const Matrix& m, unsigned k);

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Converges when
/// every off-diagonal magnitude is below `tol` (absolute, scaled by the
/// largest input entry). Throws NumericalError after `max_sweeps`.
EigenDecomposition sym_eigen(const Matrix& m, double tol = 1e-12, int max_sweeps = 100);

inline constexpr double kDefaultRankTol = 1e-10;

/// Moore-Penrose pseudoinverse of a symmetric PSD matrix. Eigenvalues at or
/// below rank_tol * lambda_max are treated as zero.
Matrix pseudo_inverse(const Matrix& m, double rank_tol = kDefaultRankTol);

struct PseudoInverse {
  Matrix inverse;
  std::size_t kernel_dim = 0;
};

/// As pseudo_inverse, also reporting the numerical kernel dimension.
PseudoInverse pseudo_inverse_with_kernel(const Matrix& m, double rank_tol = kDefaultRankTol);

bool is_symmetric(const Matrix& m, double rel_tol);

}  // namespace lrange
