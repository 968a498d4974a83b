#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lrange/autodiff.hpp"
#include "lrange/graph.hpp"
#include "lrange/matrix.hpp"
#include "lrange/range.hpp"

namespace lrange {

enum class Activation { kIdentity, kGelu };
enum class Head { kNodeRegression, kMeanPool };

/// GCN layer stack H <- act(H + A_hat H W) (residual) or act(A_hat H W),
/// between a linear input projection and a regression head.
struct ModelConfig {
  std::size_t depth = 1;
  std::size_t hidden_dim = 64;
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  Activation activation = Activation::kIdentity;
  bool residual = true;
  bool virtual_node = false;
  Head head = Head::kNodeRegression;
  bool self_loops = true;

  void validate() const;
};

struct Parameters {
  Matrix input_proj;                // in_channels x hidden
  std::vector<Matrix> layers;       // hidden x hidden each
  Matrix output_weight;             // hidden x out_channels
  Matrix output_bias;               // 1 x out_channels, used by the pooled head only
  std::uint64_t seed = 0;

  /// Flat views in a fixed order: input_proj, layers..., output_weight, output_bias.
  std::vector<Matrix*> tensors();
  std::vector<const Matrix*> tensors() const;
  std::vector<std::string> names() const;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero bias.
Parameters init_parameters(const ModelConfig& cfg, std::uint64_t seed);

/// Propagation operator for a graph, cached so repeated forwards share it.
struct Propagation {
  std::shared_ptr<const SparseMatrix> adjacency;  // on the (possibly augmented) graph
  std::shared_ptr<const SparseMatrix> embed;      // n+1 x n, virtual node only
  std::shared_ptr<const SparseMatrix> strip;      // n x n+1, virtual node only
  std::size_t nodes = 0;
};

Propagation make_propagation(const ModelConfig& cfg, const Graph& g);

struct ForwardResult {
  ad::Tape tape;
  ad::Var input;
  ad::Var output;   // n x out (node head) or 1 x out (pooled head)
  ad::Var prepool;  // n x hidden, before any pooling head
  std::vector<ad::Var> params;  // same order as Parameters::tensors()

  const Matrix& output_value() const { return tape.value(output); }
  const Matrix& prepool_value() const { return tape.value(prepool); }
};

struct ForwardOptions {
  bool input_grad = false;
  bool param_grad = false;
};

ForwardResult forward(const ModelConfig& cfg, const Parameters& params, const Propagation& prop,
                      const Matrix& x, ForwardOptions opts = {});
ForwardResult forward(const ModelConfig& cfg, const Parameters& params, const Graph& g,
                      const Matrix& x, ForwardOptions opts = {});

/// Exact Jacobian by one reverse sweep per selected (output node, channel).
/// Node heads differentiate the output; pooled heads differentiate the
/// pre-pooling node representation. Unselected input nodes and channels are
/// zeroed in X before the forward pass.
JacobianTensor model_jacobian(const ModelConfig& cfg, const Parameters& params,
                              const Propagation& prop, const Matrix& x,
                              const MaskSet* masks = nullptr);
JacobianTensor model_jacobian(const ModelConfig& cfg, const Parameters& params, const Graph& g,
                              const Matrix& x, const MaskSet* masks = nullptr);

struct HessianOptions {
  bool symmetrize = true;
  /// Relative step; the absolute step is rel_step * max(1, max|X|).
  double rel_step = 1e-4;
};

/// Hessian of a pooled (graph-level) model output: central differences of
/// the exact reverse-mode input gradient, one pair of gradients per input
/// coordinate.
HessianTensor model_hessian_scalar(const ModelConfig& cfg, const Parameters& params,
                                   const Propagation& prop, const Matrix& x,
                                   HessianOptions opts = {});
HessianTensor model_hessian_scalar(const ModelConfig& cfg, const Parameters& params,
                                   const Graph& g, const Matrix& x, HessianOptions opts = {});

/// JSON checkpoint: {"config": {...}, "seed": s, "tensors": {name: {rows, cols, values}}}.
std::string checkpoint_to_json(const ModelConfig& cfg, const Parameters& params);
std::pair<ModelConfig, Parameters> checkpoint_from_json(const std::string& text);

}  // namespace lrange
