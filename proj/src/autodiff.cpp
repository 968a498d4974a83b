#include "lrange/autodiff.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace lrange::ad {

namespace {
constexpr double kInvSqrt2 = 0.7071067811865475244;
}  // namespace

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

double gelu_derivative(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
  const double pdf = std::exp(-0.5 * x * x) * (std::numbers::inv_sqrtpi * kInvSqrt2);
  return cdf + x * pdf;
}

namespace {

bool row_is_zero(const Matrix& m, std::size_t r) {
  for (double v : m.row(r))
    if (v != 0.0) return false;
  return true;
}

// acc += g * w^T, skipping zero rows of g (adjoints of a single seed are
// row-sparse).
void accumulate_g_wt(Matrix& acc, const Matrix& g, const Matrix& w) {
  const std::size_t k = g.cols(), m = w.rows();
  for (std::size_t i = 0; i < g.rows(); ++i) {
    if (row_is_zero(g, i)) continue;
    const double* gi = g.data() + i * k;
    double* out = acc.data() + i * m;
    for (std::size_t j = 0; j < m; ++j) {
      const double* wj = w.data() + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += gi[p] * wj[p];
      out[j] += s;
    }
  }
}

// acc += x^T * g, skipping zero rows of g.
void accumulate_xt_g(Matrix& acc, const Matrix& x, const Matrix& g) {
  const std::size_t n = x.cols(), m = g.cols();
  for (std::size_t p = 0; p < g.rows(); ++p) {
    if (row_is_zero(g, p)) continue;
    const double* xp = x.data() + p * n;
    const double* gp = g.data() + p * m;
    for (std::size_t i = 0; i < n; ++i) {
      const double s = xp[i];
      if (s == 0.0) continue;
      double* out = acc.data() + i * m;
      for (std::size_t j = 0; j < m; ++j) out[j] += s * gp[j];
    }
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

Var Tape::leaf(Matrix value, bool requires_grad) {
  Node n;
  n.op = Op::kLeaf;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  return push(std::move(n));
}

Var Tape::apply(std::shared_ptr<const SparseMatrix> op, Var x) {
  Node n;
  n.op = Op::kOperator;
  n.a = x.id;
  n.value = op->multiply(at(x).value);
  n.requires_grad = at(x).requires_grad;
  n.op_matrix = std::move(op);
  return push(std::move(n));
}

Var Tape::matmul(Var x, Var w) {
  Node n;
  n.op = Op::kMatmul;
  n.a = x.id;
  n.b = w.id;
  n.value = lrange::matmul(at(x).value, at(w).value);
  n.requires_grad = at(x).requires_grad || at(w).requires_grad;
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  const Matrix& va = at(a).value;
  const Matrix& vb = at(b).value;
  require(va.rows() == vb.rows() && va.cols() == vb.cols(), "Tape::add: shape mismatch");
  Node n;
  n.op = Op::kAdd;
  n.a = a.id;
  n.b = b.id;
  n.value = va + vb;
  n.requires_grad = at(a).requires_grad || at(b).requires_grad;
  return push(std::move(n));
}

Var Tape::gelu(Var x) {
  Node n;
  n.op = Op::kGelu;
  n.a = x.id;
  n.value = at(x).value;
  for (double& v : n.value.values()) v = ad::gelu(v);
  n.requires_grad = at(x).requires_grad;
  return push(std::move(n));
}

Var Tape::mean_pool(Var x) {
  const Matrix& vx = at(x).value;
  require(vx.rows() > 0, "Tape::mean_pool: no rows");
  Node n;
  n.op = Op::kMeanPool;
  n.a = x.id;
  n.value = Matrix(1, vx.cols());
  for (std::size_t r = 0; r < vx.rows(); ++r)
    for (std::size_t c = 0; c < vx.cols(); ++c) n.value(0, c) += vx(r, c);
  n.value *= 1.0 / static_cast<double>(vx.rows());
  n.requires_grad = at(x).requires_grad;
  return push(std::move(n));
}

Var Tape::affine(Var x, Var w, Var bias) {
  const Matrix& vb = at(bias).value;
  Node n;
  n.op = Op::kAffine;
  n.a = x.id;
  n.b = w.id;
  n.c = bias.id;
  n.value = lrange::matmul(at(x).value, at(w).value);
  require(vb.rows() == 1 && vb.cols() == n.value.cols(), "Tape::affine: bias must be 1 x out");
  for (std::size_t r = 0; r < n.value.rows(); ++r)
    for (std::size_t c = 0; c < n.value.cols(); ++c) n.value(r, c) += vb(0, c);
  n.requires_grad = at(x).requires_grad || at(w).requires_grad || at(bias).requires_grad;
  return push(std::move(n));
}

Var Tape::squared_error(Var prediction, Matrix target) {
  const Matrix& p = at(prediction).value;
  require(p.rows() == target.rows() && p.cols() == target.cols(),
          "Tape::squared_error: target shape differs from prediction");
  Node n;
  n.op = Op::kSquaredError;
  n.a = prediction.id;
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double e = p.data()[i] - target.data()[i];
    sum += e * e;
  }
  n.value = Matrix(1, 1, sum / static_cast<double>(p.size()));
  n.aux = std::move(target);
  n.requires_grad = at(prediction).requires_grad;
  return push(std::move(n));
}

std::vector<Matrix> Tape::backward(Var out, const Matrix& seed) const {
  const Matrix& vo = at(out).value;
  require(seed.rows() == vo.rows() && seed.cols() == vo.cols(),
          "Tape::backward: seed shape differs from output");
  std::vector<Matrix> adj(nodes_.size());
  auto grad_of = [&](std::size_t id) -> Matrix& {
    if (adj[id].empty()) adj[id] = Matrix(nodes_[id].value.rows(), nodes_[id].value.cols());
    return adj[id];
  };
  if (!at(out).requires_grad) return adj;
  adj[out.id] = seed;

  for (std::size_t i = out.id + 1; i-- > 0;) {
    const Node& node = nodes_[i];
    if (!node.requires_grad || adj[i].empty()) continue;
    const Matrix& g = adj[i];
    switch (node.op) {
      case Op::kLeaf: break;
      case Op::kOperator:
        if (nodes_[node.a].requires_grad) grad_of(node.a) += node.op_matrix->multiply_transposed(g);
        break;
      case Op::kMatmul:
      case Op::kAffine: {
        const Matrix& x = nodes_[node.a].value;
        const Matrix& w = nodes_[node.b].value;
        if (nodes_[node.a].requires_grad) accumulate_g_wt(grad_of(node.a), g, w);
        if (nodes_[node.b].requires_grad) accumulate_xt_g(grad_of(node.b), x, g);
        if (node.op == Op::kAffine && nodes_[node.c].requires_grad) {
          Matrix& gb = grad_of(node.c);
          for (std::size_t r = 0; r < g.rows(); ++r)
            for (std::size_t c = 0; c < g.cols(); ++c) gb(0, c) += g(r, c);
        }
        break;
      }
      case Op::kAdd:
        if (nodes_[node.a].requires_grad) grad_of(node.a) += g;
        if (nodes_[node.b].requires_grad) grad_of(node.b) += g;
        break;
      case Op::kGelu: {
        if (!nodes_[node.a].requires_grad) break;
        const Matrix& x = nodes_[node.a].value;
        Matrix& gx = grad_of(node.a);
        for (std::size_t k = 0; k < g.size(); ++k) {
          const double gk = g.data()[k];
          if (gk != 0.0) gx.data()[k] += gk * gelu_derivative(x.data()[k]);
        }
        break;
      }
      case Op::kMeanPool: {
        if (!nodes_[node.a].requires_grad) break;
        Matrix& gx = grad_of(node.a);
        const double scale = 1.0 / static_cast<double>(gx.rows());
        for (std::size_t r = 0; r < gx.rows(); ++r)
          for (std::size_t c = 0; c < gx.cols(); ++c) gx(r, c) += scale * g(0, c);
        break;
      }
      case Op::kSquaredError: {
        if (!nodes_[node.a].requires_grad) break;
        const Matrix& p = nodes_[node.a].value;
        Matrix& gp = grad_of(node.a);
        const double scale = 2.0 * g(0, 0) / static_cast<double>(p.size());
        for (std::size_t k = 0; k < p.size(); ++k)
          gp.data()[k] += scale * (p.data()[k] - node.aux.data()[k]);
        break;
      }
    }
  }
  return adj;
}

}  // namespace lrange::ad
