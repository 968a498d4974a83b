#include "lrange/estimator.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "lrange/rng.hpp"

namespace lrange {

void SamplingConfig::validate() const {
  for (double p : {p_node_in, p_node_out, p_chan_in, p_chan_out})
    if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("sampling: probabilities must lie in (0, 1]");
  if (min_nodes > max_nodes) throw std::invalid_argument("sampling: min_nodes > max_nodes");
}

namespace {

std::size_t count_true(const std::vector<bool>& m) {
  return static_cast<std::size_t>(std::count(m.begin(), m.end(), true));
}

std::vector<bool> bernoulli_mask(std::size_t size, double p, Philox& rng) {
  std::vector<bool> mask(size);
  do {
    for (std::size_t i = 0; i < size; ++i) mask[i] = p >= 1.0 || rng.uniform() < p;
  } while (count_true(mask) == 0);
  return mask;
}

// Flip `count` entries currently equal to `from`, chosen uniformly.
void flip_uniform(std::vector<bool>& mask, bool from, std::size_t count, Philox& rng) {
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i] == from) pool.push_back(i);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + rng.below(pool.size() - i);
    std::swap(pool[i], pool[j]);
    mask[pool[i]] = !from;
  }
}

}  // namespace

MaskSet draw_masks(std::size_t n, std::size_t d_in, std::size_t d_out, const SamplingConfig& cfg) {
  cfg.validate();
  if (n < 1 || d_in < 1 || d_out < 1) throw std::invalid_argument("draw_masks: dimensions must be positive");
  Philox root(cfg.seed);
  Philox out_rng = root.split(1), in_rng = root.split(2), cin_rng = root.split(3), cout_rng = root.split(4);

  MaskSet m;
  m.out_nodes = bernoulli_mask(n, cfg.p_node_out, out_rng);
  const std::size_t lo = std::min(cfg.min_nodes, n), hi = std::min(cfg.max_nodes, n);
  const std::size_t selected = count_true(m.out_nodes);
  if (selected > hi) flip_uniform(m.out_nodes, true, selected - hi, out_rng);
  if (selected < lo) flip_uniform(m.out_nodes, false, lo - selected, out_rng);

  m.in_nodes = bernoulli_mask(n, cfg.p_node_in, in_rng);
  m.in_channels = bernoulli_mask(d_in, cfg.p_chan_in, cin_rng);
  m.out_channels = bernoulli_mask(d_out, cfg.p_chan_out, cout_rng);
  return m;
}

RangeEstimate estimate_range(const ModelConfig& cfg, const Parameters& params,
                             const Propagation& prop, const Matrix& x, const DistanceMatrix& d,
                             const SamplingConfig& sampling) {
  const std::size_t d_out = cfg.head == Head::kMeanPool ? cfg.hidden_dim : cfg.out_channels;
  RangeEstimate est;
  est.masks = draw_masks(prop.nodes, cfg.in_channels, d_out, sampling);
  const JacobianTensor j = model_jacobian(cfg, params, prop, x, &est.masks);
  est.report = node_range(j, d);
  est.selected_out_nodes = count_true(est.masks.out_nodes);
  est.selected_in_nodes = count_true(est.masks.in_nodes);
  est.selected_out_channels = count_true(est.masks.out_channels);
  est.selected_in_channels = count_true(est.masks.in_channels);
  est.input_masking_bias = sampling.p_node_in < 1.0 || sampling.p_chan_in < 1.0;
  return est;
}

RangeEstimate estimate_range(const ModelConfig& cfg, const Parameters& params, const Graph& g,
                             const Matrix& x, const DistanceMatrix& d, const SamplingConfig& sampling) {
  return estimate_range(cfg, params, make_propagation(cfg, g), x, d, sampling);
}

}  // namespace lrange
