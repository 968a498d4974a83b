#pragma once

// Models and checks shared by the unit tests and the acceptance runner.

#include <cmath>
#include <numbers>

#include "lrange/model.hpp"
#include "lrange/rng.hpp"
#include "lrange/tasks.hpp"
#include "oracles.hpp"

namespace fixture {

using namespace lrange;

/// Hand-set depth-1 GELU model whose pooled output approximates
/// (2/n) x^T L x on a 2-regular graph, i.e. the k = 1 squared difference
/// graph task. Each hidden pair gelu(s z) + gelu(-s z) is exactly even in z,
/// equal to 2 phi(0) s^2 z^2 up to O(s^4 z^4). With Â = A/2 the quadratic
/// form is 4 x^T (I - Â) x / n = (1/n) sum [4x^2 - (x + Âx)^2 + (x - Âx)^2].
struct QuadraticModel {
  ModelConfig cfg;
  Parameters params;
};

inline QuadraticModel quadratic_model(double s = 1e-3) {
  QuadraticModel m;
  m.cfg.depth = 1;
  m.cfg.hidden_dim = 6;
  m.cfg.activation = Activation::kGelu;
  m.cfg.residual = true;
  m.cfg.head = Head::kMeanPool;
  m.cfg.self_loops = false;
  m.params = init_parameters(m.cfg, 0);
  const double sign[6] = {1, -1, 1, -1, 1, -1};
  const double mix[6] = {0, 0, 1, 1, -1, -1};
  const double coeff[6] = {4, 4, -1, -1, 1, 1};
  const double phi0 = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
  m.params.layers[0] = Matrix(6, 6);
  for (std::size_t c = 0; c < 6; ++c) {
    m.params.input_proj(0, c) = s * sign[c];
    m.params.layers[0](c, c) = mix[c];
    m.params.output_weight(c, 0) = coeff[c] / (2.0 * phi0 * s * s);
  }
  m.params.output_bias = Matrix(1, 1);
  return m;
}

/// A small random model, graph and input, for derivative checks.
struct Triple {
  ModelConfig cfg;
  Parameters params;
  Graph graph;
  Matrix x;
};

inline Triple random_triple(std::uint64_t seed) {
  Philox rng(seed, 77);
  Triple t;
  t.cfg.depth = 1 + rng.below(3);
  t.cfg.hidden_dim = 2 + rng.below(5);
  t.cfg.in_channels = 1 + rng.below(2);
  t.cfg.out_channels = 1 + rng.below(2);
  t.cfg.activation = rng.below(2) ? Activation::kGelu : Activation::kIdentity;
  t.cfg.residual = rng.below(2) == 1;
  t.cfg.virtual_node = rng.below(4) == 0;
  t.cfg.head = rng.below(3) == 0 ? Head::kMeanPool : Head::kNodeRegression;
  t.cfg.self_loops = rng.below(2) == 1;
  const std::size_t n = 3 + rng.below(8);
  t.graph = build_erdos_renyi(n, 0.35, rng.next_u64());
  t.params = init_parameters(t.cfg, rng.next_u64());
  for (double& b : t.params.output_bias.values()) b = rng.normal();
  t.x = Matrix(n, t.cfg.in_channels);
  for (double& v : t.x.values()) v = rng.normal();
  return t;
}

/// Node output of a node-head model, or pre-pool features of a pooled one.
inline Matrix differentiated_output(const Triple& t, const Matrix& x) {
  const auto fr = forward(t.cfg, t.params, t.graph, x);
  return t.cfg.head == Head::kMeanPool ? fr.prepool_value() : fr.output_value();
}

/// Worst relative error of model_jacobian against central differences,
/// measured relative to the largest Jacobian entry.
inline double jacobian_error(const Triple& t, double h = 1e-5) {
  const JacobianTensor j = model_jacobian(t.cfg, t.params, t.graph, t.x);
  const Matrix fd = oracle::jacobian_fd([&](const Matrix& z) { return differentiated_output(t, z); }, t.x, h);
  const std::size_t n = t.x.rows(), d = t.x.cols(), c = j.out_channels();
  double scale = 1e-12, err = 0.0;
  for (double v : j.values()) scale = std::max(scale, std::abs(v));
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t a = 0; a < c; ++a)
      for (std::size_t v = 0; v < n; ++v)
        for (std::size_t b = 0; b < d; ++b)
          err = std::max(err, std::abs(j.at(u, a, v, b) - fd(u * c + a, v * d + b)));
  return err / std::max(1.0, scale);
}

/// Worst relative error of reverse-mode parameter gradients of the squared
/// error against central differences.
inline double parameter_gradient_error(const Triple& t, double h = 1e-5) {
  Philox rng(t.params.seed, 5);
  const auto probe = forward(t.cfg, t.params, t.graph, t.x);
  Matrix target(probe.output_value().rows(), probe.output_value().cols());
  for (double& v : target.values()) v = rng.normal();

  auto loss = [&](const Parameters& p) {
    auto fr = forward(t.cfg, p, t.graph, t.x);
    const auto l = fr.tape.squared_error(fr.output, target);
    return fr.tape.value(l)(0, 0);
  };
  auto fr = forward(t.cfg, t.params, t.graph, t.x, {.input_grad = false, .param_grad = true});
  const auto l = fr.tape.squared_error(fr.output, target);
  const auto adj = fr.tape.backward(l, Matrix(1, 1, 1.0));

  double err = 0.0;
  Parameters p = t.params;
  auto tensors = p.tensors();
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (t.cfg.head == Head::kNodeRegression && i + 1 == tensors.size()) continue;  // unused bias
    const Matrix& grad = adj[fr.params[i].id];
    for (std::size_t e = 0; e < tensors[i]->size(); ++e) {
      double& w = tensors[i]->values()[e];
      const double keep = w;
      w = keep + h;
      const double up = loss(p);
      w = keep - h;
      const double down = loss(p);
      w = keep;
      err = std::max(err, oracle::rel_err(grad.values()[e], (up - down) / (2 * h)));
    }
  }
  return err;
}

}  // namespace fixture
