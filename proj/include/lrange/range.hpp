#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lrange/distances.hpp"
#include "lrange/matrix.hpp"

namespace lrange {

/// Influence normalizers below this are treated as a constant output.
inline constexpr double kDegenerateMass = 1e-12;

/// Selection masks over the dimensions of a Jacobian. An empty vector means
/// "all selected".
struct MaskSet {
  std::vector<bool> out_nodes;
  std::vector<bool> in_nodes;
  std::vector<bool> out_channels;
  std::vector<bool> in_channels;
};

/// dF(X)_u^alpha / dx_v^beta for u, v in [0, n), alpha < out_channels,
/// beta < in_channels. Entries outside the masks are never read.
class JacobianTensor {
 public:
  JacobianTensor() = default;
  JacobianTensor(std::size_t nodes, std::size_t out_channels, std::size_t in_channels);

  /// Single-channel tensor whose (u, v) entry is m(u, v).
  static JacobianTensor from_matrix(const Matrix& m);

  std::size_t nodes() const { return nodes_; }
  std::size_t out_channels() const { return out_channels_; }
  std::size_t in_channels() const { return in_channels_; }

  double& at(std::size_t u, std::size_t alpha, std::size_t v, std::size_t beta) {
    return values_[index(u, alpha, v, beta)];
  }
  double at(std::size_t u, std::size_t alpha, std::size_t v, std::size_t beta) const {
    return values_[index(u, alpha, v, beta)];
  }
  /// Contiguous block dF_u^alpha / dX, laid out as nodes x in_channels.
  std::span<double> block(std::size_t u, std::size_t alpha) {
    return {values_.data() + index(u, alpha, 0, 0), nodes_ * in_channels_};
  }
  std::span<const double> block(std::size_t u, std::size_t alpha) const {
    return {values_.data() + index(u, alpha, 0, 0), nodes_ * in_channels_};
  }

  std::vector<bool> out_node_mask;
  std::vector<bool> in_node_mask;
  std::vector<bool> out_channel_mask;
  std::vector<bool> in_channel_mask;

  bool fully_selected() const;
  std::size_t selected_out_nodes() const;
  const std::vector<double>& values() const { return values_; }

 private:
  std::size_t index(std::size_t u, std::size_t alpha, std::size_t v, std::size_t beta) const {
    return ((u * out_channels_ + alpha) * nodes_ + v) * in_channels_ + beta;
  }

  std::size_t nodes_ = 0;
  std::size_t out_channels_ = 0;
  std::size_t in_channels_ = 0;
  std::vector<double> values_;
};

/// d^2 y^gamma / dx_u^alpha dx_v^beta.
class HessianTensor {
 public:
  HessianTensor() = default;
  HessianTensor(std::size_t nodes, std::size_t in_channels, std::size_t out_channels);

  /// Single-channel tensor whose (u, v) entry is m(u, v).
  static HessianTensor from_matrix(const Matrix& m);

  std::size_t nodes() const { return nodes_; }
  std::size_t in_channels() const { return in_channels_; }
  std::size_t out_channels() const { return out_channels_; }

  double& at(std::size_t u, std::size_t alpha, std::size_t v, std::size_t beta, std::size_t gamma) {
    return values_[index(u, alpha, v, beta, gamma)];
  }
  double at(std::size_t u, std::size_t alpha, std::size_t v, std::size_t beta,
            std::size_t gamma) const {
    return values_[index(u, alpha, v, beta, gamma)];
  }

  /// max |H(u,a,v,b,g) - H(v,b,u,a,g)|
  double asymmetry() const;
  double max_abs() const;
  void symmetrize();
  /// (u, v) slice for channels (alpha, beta, gamma).
  Matrix slice(std::size_t alpha = 0, std::size_t beta = 0, std::size_t gamma = 0) const;
  const std::vector<double>& values() const { return values_; }

 private:
  std::size_t index(std::size_t u, std::size_t alpha, std::size_t v, std::size_t beta,
                    std::size_t gamma) const {
    return (((u * in_channels_ + alpha) * nodes_ + v) * in_channels_ + beta) * out_channels_ +
           gamma;
  }

  std::size_t nodes_ = 0;
  std::size_t in_channels_ = 0;
  std::size_t out_channels_ = 0;
  std::vector<double> values_;
};

struct InfluenceDistribution {
  std::size_t source = 0;
  std::vector<double> weights;
  double normalizer = 0.0;
  bool degenerate = false;
};

struct RangeReport {
  Metric metric = Metric::kSpd;
  bool normalized = true;
  /// Per node; unselected nodes (sampled estimates) hold 0.
  std::vector<double> node_ranges;
  /// Which nodes entered graph_range; all true for exact computations.
  std::vector<bool> selected;
  double graph_range = 0.0;
  std::size_t degenerate_count = 0;
  std::size_t selected_count() const;
};

/// Whether the source node's own derivative enters the influence
/// distribution. It never adds distance, only normalizer mass; excluding it
/// gives the neighborhood-only normalizer of the analytic node-level example.
enum class SelfInfluence { kInclude, kExclude };

InfluenceDistribution influence_from_jacobian(const JacobianTensor& j, std::size_t u,
                                              SelfInfluence self = SelfInfluence::kInclude);
/// The Hessian analogue: mixing distribution J_u summed over (alpha, beta, gamma).
InfluenceDistribution mixing_from_hessian(const HessianTensor& h, std::size_t u);

/// Jacobian-based range of every selected output node.
RangeReport node_range(const JacobianTensor& j, const DistanceMatrix& d, bool normalized = true,
                       SelfInfluence self = SelfInfluence::kInclude);

/// Hessian-based (graph-level) range of every node. The diagonal v = u enters
/// the normalizer but contributes zero distance.
RangeReport hessian_node_range(const HessianTensor& h, const DistanceMatrix& d,
                               bool normalized = true);

/// Unweighted mean of graph ranges; all reports must share metric and
/// normalization.
double dataset_range(std::span<const RangeReport> reports);

std::string to_json(const RangeReport& r);
RangeReport range_report_from_json(const std::string& text);

}  // namespace lrange
