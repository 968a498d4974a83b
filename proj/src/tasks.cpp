#include "lrange/tasks.hpp"

#include <algorithm>
#include <stdexcept>

#include <json.hpp>

#include "lrange/linalg.hpp"

namespace lrange {

std::string_view family_name(TaskFamily f) {
  switch (f) {
    case TaskFamily::kPower: return "k_power";
    case TaskFamily::kRectangle: return "k_rectangle";
    case TaskFamily::kDirac: return "k_dirac";
    case TaskFamily::kCustom: return "custom";
  }
  return "custom";
}

TaskFamily parse_family(std::string_view s) {
  if (s == "k_power" || s == "power") return TaskFamily::kPower;
  if (s == "k_rectangle" || s == "rectangle") return TaskFamily::kRectangle;
  if (s == "k_dirac" || s == "dirac") return TaskFamily::kDirac;
  if (s == "custom") return TaskFamily::kCustom;
  throw std::invalid_argument("unknown task family '" + std::string(s) + "'");
}

LinearTask k_power(const Graph& g, unsigned k, bool self_loops) {
  LinearTask t;
  t.weights = matpow(sym_norm_adjacency(g, self_loops), k);
  t.family = TaskFamily::kPower;
  t.k = k;
  t.self_loops = self_loops;
  return t;
}

namespace {

// Row u uniform over `support(u)`; empty support leaves a zero row.
template <typename Support>
Matrix uniform_rows(std::size_t n, Support&& support) {
  Matrix w(n, n);
  for (NodeId u = 0; u < n; ++u) {
    const std::vector<NodeId> nodes = support(u);
    if (nodes.empty()) continue;
    const double share = 1.0 / static_cast<double>(nodes.size());
    for (NodeId v : nodes) w(u, v) = share;
  }
  return w;
}

}  // namespace

LinearTask k_rectangle(const Graph& g, unsigned k) {
  if (k == 0) throw std::invalid_argument("k_rectangle: k must be >= 1");
  LinearTask t;
  t.weights = uniform_rows(g.num_nodes(), [&](NodeId u) { return khop_neighborhood(g, u, k); });
  t.family = TaskFamily::kRectangle;
  t.k = k;
  return t;
}

LinearTask k_dirac(const Graph& g, unsigned k) {
  if (k == 0) throw std::invalid_argument("k_dirac: k must be >= 1");
  LinearTask t;
  t.weights = uniform_rows(g.num_nodes(), [&](NodeId u) { return khop_shells(g, u, k).back(); });
  t.family = TaskFamily::kDirac;
  t.k = k;
  return t;
}

LinearTask custom_task(Matrix weights) {
  if (!weights.is_square()) throw std::invalid_argument("custom_task: weights must be square");
  if (!weights.all_finite()) throw std::invalid_argument("custom_task: non-finite weight");
  LinearTask t;
  t.weights = std::move(weights);
  return t;
}

std::string to_json(const LinearTask& t) {
  nlohmann::ordered_json j;
  j["family"] = family_name(t.family);
  j["k"] = t.k;
  j["self_loops"] = t.self_loops;
  j["n"] = t.num_nodes();
  return j.dump();
}

LinearTask linear_task_from_json(const std::string& text, const Graph& g) {
  const auto j = nlohmann::json::parse(text);
  const auto family = parse_family(j.at("family").get<std::string>());
  const auto k = j.at("k").get<unsigned>();
  const auto n = j.at("n").get<std::size_t>();
  if (n != g.num_nodes()) {
    throw std::invalid_argument("task descriptor is for n = " + std::to_string(n) +
                                ", graph has " + std::to_string(g.num_nodes()) + " nodes");
  }
  switch (family) {
    case TaskFamily::kPower: return k_power(g, k, j.value("self_loops", false));
    case TaskFamily::kRectangle: return k_rectangle(g, k);
    case TaskFamily::kDirac: return k_dirac(g, k);
    case TaskFamily::kCustom: break;
  }
  throw std::invalid_argument("custom tasks are loaded from a weight CSV, not a descriptor");
}

PairwiseTaskSpec squared_difference_node_spec(const Graph& g, unsigned k) {
  PairwiseTaskSpec spec;
  spec.weight = k_rectangle(g, k).weights;
  spec.interaction = Interaction::kSquaredDifference;
  spec.node_aggregation = Aggregation::kSum;
  return spec;
}

PairwiseTaskSpec squared_difference_graph_spec(const Graph& g, unsigned k) {
  const std::size_t n = g.num_nodes();
  PairwiseTaskSpec spec;
  spec.weight = Matrix(n, n);
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v : khop_neighborhood(g, u, k)) spec.weight(u, v) = 1.0;
  spec.interaction = Interaction::kSquaredDifference;
  spec.node_aggregation = Aggregation::kSum;
  spec.graph_aggregation = Aggregation::kMean;
  return spec;
}

PairwiseTaskSpec power_weighted_graph_spec(const Graph& g, unsigned k, bool self_loops) {
  PairwiseTaskSpec spec;
  spec.weight = k_power(g, k, self_loops).weights;
  spec.interaction = Interaction::kSquaredDifference;
  spec.node_aggregation = Aggregation::kSum;
  spec.graph_aggregation = Aggregation::kMean;
  return spec;
}

namespace {

void check_spec(const PairwiseTaskSpec& spec, const Matrix& x) {
  const std::size_t n = x.rows();
  if (spec.weight.rows() != n || spec.weight.cols() != n) {
    throw std::invalid_argument("pairwise task: weight is " + shape_string(spec.weight) +
                                " but X has " + std::to_string(n) + " rows");
  }
  if (!spec.weight.all_finite()) throw std::invalid_argument("pairwise task: non-finite weight");
  if (spec.interaction == Interaction::kSquaredDifference && x.cols() != 1) {
    throw std::invalid_argument("pairwise task: squared difference needs 1 input channel, got " +
                                std::to_string(x.cols()));
  }
}

double aggregation_scale(Aggregation a, std::size_t n) {
  return a == Aggregation::kMean ? 1.0 / static_cast<double>(n) : 1.0;
}

}  // namespace

Matrix pairwise_node_outputs(const PairwiseTaskSpec& spec, const Matrix& x) {
  check_spec(spec, x);
  const std::size_t n = x.rows(), d = x.cols();
  const double s = aggregation_scale(spec.node_aggregation, n);
  const Matrix& w = spec.weight;
  Matrix y(n, d);
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < n; ++v) {
      const double wuv = w(u, v);
      if (wuv == 0.0) continue;
      for (std::size_t c = 0; c < d; ++c) {
        double inter = 0.0;
        switch (spec.interaction) {
          case Interaction::kSquaredDifference: {
            const double diff = x(u, c) - x(v, c);
            inter = diff * diff;
            break;
          }
          case Interaction::kProduct: inter = x(u, c) * x(v, c); break;
          case Interaction::kCopySource: inter = x(v, c); break;
        }
        y(u, c) += s * wuv * inter;
      }
    }
  }
  return y;
}

NodeTaskResult pairwise_node_task(const PairwiseTaskSpec& spec, const Graph& g, const Matrix& x) {
  if (g.num_nodes() != x.rows()) throw std::invalid_argument("pairwise_node_task: X rows != n");
  NodeTaskResult out;
  out.outputs = pairwise_node_outputs(spec, x);
  const std::size_t n = x.rows(), d = x.cols();
  const double s = aggregation_scale(spec.node_aggregation, n);
  const Matrix& w = spec.weight;
  out.jacobian = JacobianTensor(n, d, d);
  auto& j = out.jacobian;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < n; ++v) {
      const double wuv = s * w(u, v);
      if (wuv == 0.0) continue;
      for (std::size_t c = 0; c < d; ++c) {
        switch (spec.interaction) {
          case Interaction::kSquaredDifference:
            if (v == u) break;
            j.at(u, c, v, c) += 2.0 * wuv * (x(v, c) - x(u, c));
            j.at(u, c, u, c) += 2.0 * wuv * (x(u, c) - x(v, c));
            break;
          case Interaction::kProduct:
            j.at(u, c, v, c) += wuv * x(u, c);
            j.at(u, c, u, c) += wuv * x(v, c);
            break;
          case Interaction::kCopySource: j.at(u, c, v, c) += wuv; break;
        }
      }
    }
  }
  return out;
}

std::vector<double> pairwise_graph_outputs(const PairwiseTaskSpec& spec, const Matrix& x) {
  if (!spec.graph_aggregation) {
    throw std::invalid_argument("pairwise graph task: spec has no graph aggregation");
  }
  const Matrix y = pairwise_node_outputs(spec, x);
  const double s = aggregation_scale(*spec.graph_aggregation, x.rows());
  std::vector<double> out(y.cols(), 0.0);
  for (std::size_t u = 0; u < y.rows(); ++u)
    for (std::size_t c = 0; c < y.cols(); ++c) out[c] += s * y(u, c);
  return out;
}

GraphTaskResult pairwise_graph_task(const PairwiseTaskSpec& spec, const Graph& g, const Matrix& x) {
  if (g.num_nodes() != x.rows()) throw std::invalid_argument("pairwise_graph_task: X rows != n");
  GraphTaskResult out;
  out.outputs = pairwise_graph_outputs(spec, x);
  const std::size_t n = x.rows(), d = x.cols();
  const double f =
      aggregation_scale(spec.node_aggregation, n) * aggregation_scale(*spec.graph_aggregation, n);
  const Matrix& w = spec.weight;
  out.hessian = HessianTensor(n, d, d);
  auto& h = out.hessian;
  // Quadratic in X, so the Hessian is constant; accumulate per (u, v) term.
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < n; ++v) {
      const double wuv = f * w(u, v);
      if (wuv == 0.0) continue;
      for (std::size_t c = 0; c < d; ++c) {
        switch (spec.interaction) {
          case Interaction::kSquaredDifference:
            if (v == u) break;
            h.at(u, c, u, c, c) += 2.0 * wuv;
            h.at(v, c, v, c, c) += 2.0 * wuv;
            h.at(u, c, v, c, c) -= 2.0 * wuv;
            h.at(v, c, u, c, c) -= 2.0 * wuv;
            break;
          case Interaction::kProduct:
            if (v == u) {
              h.at(u, c, u, c, c) += 2.0 * wuv;
            } else {
              h.at(u, c, v, c, c) += wuv;
              h.at(v, c, u, c, c) += wuv;
            }
            break;
          case Interaction::kCopySource: break;
        }
      }
    }
  }
  return out;
}

namespace {

double shell_weighted_sum(const Graph& g, NodeId u, unsigned k, std::size_t& neighborhood) {
  if (k == 0) throw std::invalid_argument("analytic range: k must be >= 1");
  const auto shells = khop_shells(g, u, k);
  double sum = 0.0;
  neighborhood = 0;
  for (std::size_t r = 0; r < shells.size(); ++r) {
    neighborhood += shells[r].size();
    sum += static_cast<double>(shells[r].size()) * static_cast<double>(r + 1);
  }
  if (neighborhood == 0) {
    throw std::invalid_argument("analytic range: node " + std::to_string(u) +
                                " has an empty neighborhood");
  }
  return sum;
}

}  // namespace

double analytic_node_range(const Graph& g, NodeId u, unsigned k) {
  std::size_t size = 0;
  const double sum = shell_weighted_sum(g, u, k, size);
  return sum / static_cast<double>(size);
}

double analytic_graph_range(const Graph& g, NodeId u, unsigned k) {
  std::size_t size = 0;
  const double sum = shell_weighted_sum(g, u, k, size);
  return sum / (2.0 * static_cast<double>(size));
}

}  // namespace lrange
