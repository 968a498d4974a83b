#include "lrange/range.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace lrange {

JacobianTensor::JacobianTensor(std::size_t nodes, std::size_t out_channels, std::size_t in_channels)
    : out_node_mask(nodes, true),
      in_node_mask(nodes, true),
      out_channel_mask(out_channels, true),
      in_channel_mask(in_channels, true),
      nodes_(nodes),
      out_channels_(out_channels),
      in_channels_(in_channels),
      values_(nodes * out_channels * nodes * in_channels, 0.0) {}

JacobianTensor JacobianTensor::from_matrix(const Matrix& m) {
  if (!m.is_square()) throw std::invalid_argument("JacobianTensor::from_matrix: not square");
  JacobianTensor j(m.rows(), 1, 1);
  j.values_ = m.values();
  return j;
}

bool JacobianTensor::fully_selected() const {
  auto all = [](const std::vector<bool>& m) { return std::all_of(m.begin(), m.end(), [](bool b) { return b; }); };
  return all(out_node_mask) && all(in_node_mask) && all(out_channel_mask) && all(in_channel_mask);
}

std::size_t JacobianTensor::selected_out_nodes() const {
  return static_cast<std::size_t>(std::count(out_node_mask.begin(), out_node_mask.end(), true));
}

HessianTensor::HessianTensor(std::size_t nodes, std::size_t in_channels, std::size_t out_channels)
    : nodes_(nodes),
      in_channels_(in_channels),
      out_channels_(out_channels),
      values_(nodes * in_channels * nodes * in_channels * out_channels, 0.0) {}

HessianTensor HessianTensor::from_matrix(const Matrix& m) {
  if (!m.is_square()) throw std::invalid_argument("HessianTensor::from_matrix: not square");
  HessianTensor h(m.rows(), 1, 1);
  h.values_ = m.values();
  return h;
}

double HessianTensor::asymmetry() const {
  double worst = 0.0;
  for (std::size_t u = 0; u < nodes_; ++u)
    for (std::size_t a = 0; a < in_channels_; ++a)
      for (std::size_t v = 0; v < nodes_; ++v)
        for (std::size_t b = 0; b < in_channels_; ++b)
          for (std::size_t g = 0; g < out_channels_; ++g)
            worst = std::max(worst, std::abs(at(u, a, v, b, g) - at(v, b, u, a, g)));
  return worst;
}

double HessianTensor::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

void HessianTensor::symmetrize() {
  for (std::size_t u = 0; u < nodes_; ++u)
    for (std::size_t a = 0; a < in_channels_; ++a)
      for (std::size_t v = 0; v < nodes_; ++v)
        for (std::size_t b = 0; b < in_channels_; ++b) {
          if (std::make_pair(v, b) <= std::make_pair(u, a)) continue;
          for (std::size_t g = 0; g < out_channels_; ++g) {
            const double mean = 0.5 * (at(u, a, v, b, g) + at(v, b, u, a, g));
            at(u, a, v, b, g) = mean;
            at(v, b, u, a, g) = mean;
          }
        }
}

Matrix HessianTensor::slice(std::size_t alpha, std::size_t beta, std::size_t gamma) const {
  Matrix m(nodes_, nodes_);
  for (std::size_t u = 0; u < nodes_; ++u)
    for (std::size_t v = 0; v < nodes_; ++v) m(u, v) = at(u, alpha, v, beta, gamma);
  return m;
}

std::size_t RangeReport::selected_count() const {
  return static_cast<std::size_t>(std::count(selected.begin(), selected.end(), true));
}

InfluenceDistribution influence_from_jacobian(const JacobianTensor& j, std::size_t u,
                                              SelfInfluence self) {
  if (u >= j.nodes()) throw std::out_of_range("influence_from_jacobian: node out of range");
  if (!j.out_node_mask[u]) {
    throw std::invalid_argument("influence_from_jacobian: node " + std::to_string(u) +
                                " is masked out");
  }
  const std::size_t n = j.nodes(), d = j.in_channels();
  InfluenceDistribution dist;
  dist.source = u;
  dist.weights.assign(n, 0.0);
  for (std::size_t alpha = 0; alpha < j.out_channels(); ++alpha) {
    if (!j.out_channel_mask[alpha]) continue;
    const auto blk = j.block(u, alpha);
    for (std::size_t v = 0; v < n; ++v) {
      if (!j.in_node_mask[v] || (v == u && self == SelfInfluence::kExclude)) continue;
      double s = 0.0;
      for (std::size_t beta = 0; beta < d; ++beta)
        if (j.in_channel_mask[beta]) s += std::abs(blk[v * d + beta]);
      dist.weights[v] += s;
    }
  }
  for (double w : dist.weights) dist.normalizer += w;
  if (dist.normalizer < kDegenerateMass) {
    dist.degenerate = true;
    std::fill(dist.weights.begin(), dist.weights.end(), 0.0);
  } else {
    for (double& w : dist.weights) w /= dist.normalizer;
  }
  return dist;
}

InfluenceDistribution mixing_from_hessian(const HessianTensor& h, std::size_t u) {
  if (u >= h.nodes()) throw std::out_of_range("mixing_from_hessian: node out of range");
  const std::size_t n = h.nodes();
  InfluenceDistribution dist;
  dist.source = u;
  dist.weights.assign(n, 0.0);
  for (std::size_t a = 0; a < h.in_channels(); ++a)
    for (std::size_t v = 0; v < n; ++v)
      for (std::size_t b = 0; b < h.in_channels(); ++b)
        for (std::size_t g = 0; g < h.out_channels(); ++g) dist.weights[v] += std::abs(h.at(u, a, v, b, g));
  for (double w : dist.weights) dist.normalizer += w;
  if (dist.normalizer < kDegenerateMass) {
    dist.degenerate = true;
    std::fill(dist.weights.begin(), dist.weights.end(), 0.0);
  } else {
    for (double& w : dist.weights) w /= dist.normalizer;
  }
  return dist;
}

namespace {

// Shared tail of node_range / hessian_node_range; `influence(u)` yields the
// distribution for node u.
template <typename Influence>
RangeReport summarize(std::size_t n, const std::vector<bool>& selected, const DistanceMatrix& d,
                      bool normalized, Influence&& influence) {
  RangeReport rep;
  rep.metric = d.metric;
  rep.normalized = normalized;
  rep.node_ranges.assign(n, 0.0);
  rep.selected = selected;
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t u = 0; u < n; ++u) {
    if (!selected[u]) continue;
    ++count;
    const InfluenceDistribution dist = influence(u);
    if (dist.degenerate) {
      ++rep.degenerate_count;
      continue;
    }
    double expected = 0.0;
    for (std::size_t v = 0; v < n; ++v) expected += dist.weights[v] * d(u, v);
    rep.node_ranges[u] = normalized ? expected : expected * dist.normalizer;
    total += rep.node_ranges[u];
  }
  if (count == 0) throw std::invalid_argument("range: no selected nodes");
  rep.graph_range = total / static_cast<double>(count);
  return rep;
}

}  // namespace

RangeReport node_range(const JacobianTensor& j, const DistanceMatrix& d, bool normalized,
                       SelfInfluence self) {
  if (j.nodes() != d.size()) {
    throw std::invalid_argument("node_range: Jacobian has " + std::to_string(j.nodes()) +
                                " nodes, distance matrix has " + std::to_string(d.size()));
  }
  return summarize(j.nodes(), j.out_node_mask, d, normalized,
                   [&](std::size_t u) { return influence_from_jacobian(j, u, self); });
}

RangeReport hessian_node_range(const HessianTensor& h, const DistanceMatrix& d, bool normalized) {
  if (h.nodes() != d.size()) {
    throw std::invalid_argument("hessian_node_range: Hessian has " + std::to_string(h.nodes()) +
                                " nodes, distance matrix has " + std::to_string(d.size()));
  }
  return summarize(h.nodes(), std::vector<bool>(h.nodes(), true), d, normalized,
                   [&](std::size_t u) { return mixing_from_hessian(h, u); });
}

double dataset_range(std::span<const RangeReport> reports) {
  if (reports.empty()) throw std::invalid_argument("dataset_range: no reports");
  double total = 0.0;
  for (const auto& r : reports) {
    if (r.metric != reports.front().metric || r.normalized != reports.front().normalized) {
      throw std::invalid_argument("dataset_range: reports mix metrics or normalizations");
    }
    total += r.graph_range;
  }
  return total / static_cast<double>(reports.size());
}

std::string to_json(const RangeReport& r) {
  nlohmann::ordered_json j;
  j["metric"] = metric_tag(r.metric);
  j["normalized"] = r.normalized;
  j["node_ranges"] = r.node_ranges;
  j["graph_range"] = r.graph_range;
  j["degenerate_count"] = r.degenerate_count;
  if (r.selected_count() != r.selected.size()) {
    std::vector<std::size_t> ids;
    for (std::size_t u = 0; u < r.selected.size(); ++u)
      if (r.selected[u]) ids.push_back(u);
    j["selected_nodes"] = ids;
  }
  return j.dump(2);
}

RangeReport range_report_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  RangeReport r;
  r.metric = parse_metric(j.at("metric").get<std::string>());
  r.normalized = j.at("normalized").get<bool>();
  r.node_ranges = j.at("node_ranges").get<std::vector<double>>();
  r.graph_range = j.at("graph_range").get<double>();
  r.degenerate_count = j.at("degenerate_count").get<std::size_t>();
  if (j.contains("selected_nodes")) {
    r.selected.assign(r.node_ranges.size(), false);
    for (auto u : j["selected_nodes"].get<std::vector<std::size_t>>()) r.selected.at(u) = true;
  } else {
    r.selected.assign(r.node_ranges.size(), true);
  }
  return r;
}

}  // namespace lrange
