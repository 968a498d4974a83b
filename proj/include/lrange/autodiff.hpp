#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "lrange/matrix.hpp"

namespace lrange::ad {

/// Handle to a value recorded on a Tape.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
};

/// Append-only record of matrix-valued primitives with cached forward values.
///
/// Every primitive stores its operand handles and its output. `backward`
/// replays the records in reverse and never mutates the tape, so several
/// sweeps may run concurrently on one tape.
class Tape {
 public:
  enum class Op {
    kLeaf,
    kOperator,      // fixed sparse operator times x
    kMatmul,        // x * w
    kAdd,           // a + b
    kGelu,          // elementwise
    kMeanPool,      // column means, 1 x cols
    kAffine,        // x * w + broadcast bias
    kSquaredError,  // mean (x - target)^2, 1 x 1
  };

  /// Leaf holding `value`; gradients reach it only if `requires_grad`.
  Var leaf(Matrix value, bool requires_grad);
  Var apply(std::shared_ptr<const SparseMatrix> op, Var x);
  Var matmul(Var x, Var w);
  Var add(Var a, Var b);
  Var gelu(Var x);
  Var mean_pool(Var x);
  Var affine(Var x, Var w, Var bias);
  Var squared_error(Var prediction, Matrix target);

  const Matrix& value(Var v) const { return nodes_.at(v.id).value; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  std::size_t size() const { return nodes_.size(); }
  Op op(Var v) const { return nodes_.at(v.id).op; }

  /// Reverse sweep seeded with `seed` (same shape as value(out)). Returns the
  /// adjoint of every node; entries for nodes that do not require gradients
  /// are left empty.
  std::vector<Matrix> backward(Var out, const Matrix& seed) const;

 private:
  struct Node {
    Op op = Op::kLeaf;
    std::size_t a = 0, b = 0, c = 0;
    Matrix value;
    bool requires_grad = false;
    std::shared_ptr<const SparseMatrix> op_matrix;  // kOperator
    Matrix aux;                                     // kGelu: x; kSquaredError: target
  };

  Var push(Node node);
  const Node& at(Var v) const { return nodes_.at(v.id); }

  std::vector<Node> nodes_;
};

double gelu(double x);
double gelu_derivative(double x);

}  // namespace lrange::ad
