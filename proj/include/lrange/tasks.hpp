#pragma once

#include <optional>
#include <string>
#include <utility>

#include "lrange/graph.hpp"
#include "lrange/matrix.hpp"
#include "lrange/range.hpp"

namespace lrange {

enum class TaskFamily { kPower, kRectangle, kDirac, kCustom };

std::string_view family_name(TaskFamily f);
TaskFamily parse_family(std::string_view s);

/// Linear node-level task Y = L X; L(u, v) is the interaction from v to u.
struct LinearTask {
  Matrix weights;
  TaskFamily family = TaskFamily::kCustom;
  unsigned k = 0;
  bool self_loops = false;

  std::size_t num_nodes() const { return weights.rows(); }
  Matrix apply(const Matrix& x) const { return matmul(weights, x); }
  JacobianTensor jacobian() const { return JacobianTensor::from_matrix(weights); }
};

LinearTask k_power(const Graph& g, unsigned k, bool self_loops);
LinearTask k_rectangle(const Graph& g, unsigned k);
LinearTask k_dirac(const Graph& g, unsigned k);
LinearTask custom_task(Matrix weights);

/// {family, k, self_loops, n}
std::string to_json(const LinearTask& t);
/// Rebuilds a family task on `g` from its JSON descriptor. Custom tasks need
/// their weights supplied separately.
LinearTask linear_task_from_json(const std::string& text, const Graph& g);

enum class Interaction { kSquaredDifference, kProduct, kCopySource };
enum class Aggregation { kSum, kMean };

/// F(X)_u = agg_v W(u, v) * I(x_u, x_v), optionally pooled over u.
struct PairwiseTaskSpec {
  Matrix weight;
  Interaction interaction = Interaction::kSquaredDifference;
  Aggregation node_aggregation = Aggregation::kSum;
  std::optional<Aggregation> graph_aggregation;
};

/// Weight 1/|N_k(u)| on the k-hop neighborhood, sum over v: the averaged
/// squared difference node task.
PairwiseTaskSpec squared_difference_node_spec(const Graph& g, unsigned k);
/// Unit weight on the k-hop neighborhood, summed per node, averaged over
/// nodes: the squared difference graph task.
PairwiseTaskSpec squared_difference_graph_spec(const Graph& g, unsigned k);
/// Squared difference with weight (A_hat^k)(u, v), averaged over nodes.
PairwiseTaskSpec power_weighted_graph_spec(const Graph& g, unsigned k, bool self_loops);

struct NodeTaskResult {
  Matrix outputs;
  JacobianTensor jacobian;
};

struct GraphTaskResult {
  std::vector<double> outputs;  // one per output channel
  HessianTensor hessian;
};

/// Outputs and the analytic Jacobian of a node-level pairwise task.
NodeTaskResult pairwise_node_task(const PairwiseTaskSpec& spec, const Graph& g, const Matrix& x);
/// Outputs only (no Jacobian).
Matrix pairwise_node_outputs(const PairwiseTaskSpec& spec, const Matrix& x);

/// Output and the analytic Hessian of a graph-level pairwise task.
GraphTaskResult pairwise_graph_task(const PairwiseTaskSpec& spec, const Graph& g, const Matrix& x);
std::vector<double> pairwise_graph_outputs(const PairwiseTaskSpec& spec, const Matrix& x);

/// Expected normalized SPD range of the squared difference node task at u:
/// (1/|N_k(u)|) sum_r |shell_r(u)| r.
double analytic_node_range(const Graph& g, NodeId u, unsigned k);
/// Normalized SPD range of the squared difference graph task at u; half the
/// node-level value.
double analytic_graph_range(const Graph& g, NodeId u, unsigned k);

}  // namespace lrange
