#pragma once

#include <cstdint>
#include <limits>

#include "lrange/distances.hpp"
#include "lrange/model.hpp"
#include "lrange/range.hpp"

namespace lrange {

/// Bernoulli subsampling of Jacobian dimensions.
struct SamplingConfig {
  double p_node_in = 1.0;
  double p_node_out = 1.0;
  double p_chan_in = 1.0;
  double p_chan_out = 1.0;
  std::size_t min_nodes = 16;
  std::size_t max_nodes = 256;
  std::uint64_t seed = 0;

  void validate() const;
  bool all_ones() const {
    return p_node_in == 1.0 && p_node_out == 1.0 && p_chan_in == 1.0 && p_chan_out == 1.0;
  }
};

/// Independent Bernoulli(p) entries. The selected output-node count is then
/// clamped into [min_nodes, max_nodes] (capped at n) by deselecting a uniform
/// subset of the surplus or selecting a uniform subset of the deficit; a mask
/// with nothing selected is redrawn. Probability 1 gives an all-true mask.
MaskSet draw_masks(std::size_t n, std::size_t d_in, std::size_t d_out, const SamplingConfig& cfg);

struct RangeEstimate {
  RangeReport report;
  MaskSet masks;
  std::size_t selected_out_nodes = 0;
  std::size_t selected_in_nodes = 0;
  std::size_t selected_out_channels = 0;
  std::size_t selected_in_channels = 0;
  /// Set when input nodes or channels are subsampled: masking the input
  /// changes the forward pass, so the estimate may be biased.
  bool input_masking_bias = false;
};

/// Masked forward plus reverse sweeps for the selected outputs only; the
/// graph range is the mean over selected output nodes.
RangeEstimate estimate_range(const ModelConfig& cfg, const Parameters& params,
                             const Propagation& prop, const Matrix& x, const DistanceMatrix& d,
                             const SamplingConfig& sampling);
RangeEstimate estimate_range(const ModelConfig& cfg, const Parameters& params, const Graph& g,
                             const Matrix& x, const DistanceMatrix& d, const SamplingConfig& sampling);

}  // namespace lrange
