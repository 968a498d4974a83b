#include "lrange/distances.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <limits>
#include <stdexcept>

#include "lrange/format.hpp"
#include "lrange/linalg.hpp"

namespace lrange {

std::string_view metric_tag(Metric m) { return m == Metric::kSpd ? "SPD" : "RES"; }

Metric parse_metric(std::string_view s) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "spd") return Metric::kSpd;
  if (lower == "res" || lower == "resistance") return Metric::kResistance;
  throw std::invalid_argument("unknown metric '" + std::string(s) + "' (expected spd or res)");
}

namespace {

DistanceMatrix empty_distances(const Graph& g, Metric metric, const ComponentLabeling& cc) {
  const std::size_t n = g.num_nodes();
  DistanceMatrix d;
  d.metric = metric;
  d.values = Matrix(n, n);
  d.cross_component.assign(n * n, false);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v) d.cross_component[u * n + v] = cc.label[u] != cc.label[v];
  return d;
}

}  // namespace

DistanceMatrix spd_all_pairs(const Graph& g) {
  const std::size_t n = g.num_nodes();
  auto d = empty_distances(g, Metric::kSpd, connected_components(g));
  constexpr std::size_t kUnseen = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> hops(n);
  std::deque<NodeId> queue;
  for (NodeId s = 0; s < n; ++s) {
    std::fill(hops.begin(), hops.end(), kUnseen);
    hops[s] = 0;
    queue.push_back(s);
    while (!queue.empty()) {
      const NodeId x = queue.front();
      queue.pop_front();
      for (NodeId y : g.neighbors(x))
        if (hops[y] == kUnseen) {
          hops[y] = hops[x] + 1;
          queue.push_back(y);
        }
    }
    for (NodeId t = 0; t < n; ++t)
      if (hops[t] != kUnseen) d.values(s, t) = static_cast<double>(hops[t]);
  }
  return d;
}

DistanceMatrix resistance_all_pairs(const Graph& g) {
  const auto cc = connected_components(g);
  auto d = empty_distances(g, Metric::kResistance, cc);
  for (const auto& nodes : cc.members()) {
    if (nodes.size() < 2) continue;
    const Graph sub = g.induced(nodes);
    const auto pinv = pseudo_inverse_with_kernel(sub.laplacian());
    if (pinv.kernel_dim != 1) {
      throw NumericalError("resistance_all_pairs: component Laplacian kernel has dimension " +
                           std::to_string(pinv.kernel_dim) + ", expected 1");
    }
    const Matrix& lp = pinv.inverse;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      for (std::size_t j = i + 1; j < nodes.size(); ++j) {
        const double r = std::max(0.0, lp(i, i) + lp(j, j) - 2.0 * lp(i, j));
        d.values(nodes[i], nodes[j]) = r;
        d.values(nodes[j], nodes[i]) = r;
      }
    }
  }
  return d;
}

DistanceMatrix distances(const Graph& g, Metric metric) {
  return metric == Metric::kSpd ? spd_all_pairs(g) : resistance_all_pairs(g);
}

Matrix laplacian_pseudo_inverse(const Graph& g) {
  const auto pinv = pseudo_inverse_with_kernel(g.laplacian());
  const auto cc = connected_components(g);
  if (pinv.kernel_dim != cc.count) {
    throw NumericalError("laplacian_pseudo_inverse: kernel dimension " +
                         std::to_string(pinv.kernel_dim) + " differs from component count " +
                         std::to_string(cc.count));
  }
  return pinv.inverse;
}

std::string to_csv(const DistanceMatrix& d) {
  const std::size_t n = d.size();
  std::string out = "metric=" + std::string(metric_tag(d.metric)) + " n=" + std::to_string(n) + "\n";
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < n; ++v) {
      if (v) out += ',';
      out += format_double(d.values(u, v));
    }
    out += '\n';
  }
  return out;
}

DistanceMatrix distance_matrix_from_csv(std::string_view text) {
  auto next_line = [&text]() {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    return trim(line);
  };
  const auto header = next_line();
  const auto mpos = header.find("metric=");
  const auto npos = header.find(" n=");
  if (mpos != 0 || npos == std::string_view::npos) {
    throw std::invalid_argument("distance CSV: header must be 'metric=<SPD|RES> n=<n>'");
  }
  DistanceMatrix d;
  d.metric = parse_metric(header.substr(7, npos - 7));
  const auto n = static_cast<std::size_t>(parse_unsigned(header.substr(npos + 3)));
  d.values = Matrix(n, n);
  d.cross_component.assign(n * n, false);
  for (std::size_t u = 0; u < n; ++u) {
    auto line = next_line();
    for (std::size_t v = 0; v < n; ++v) {
      const auto comma = line.find(',');
      if ((v + 1 < n) == (comma == std::string_view::npos)) {
        throw std::invalid_argument("distance CSV: row " + std::to_string(u) + " does not have " +
                                    std::to_string(n) + " entries");
      }
      d.values(u, v) = parse_double(line.substr(0, comma));
      line = comma == std::string_view::npos ? std::string_view{} : line.substr(comma + 1);
      // off-diagonal zeros only arise across components
      d.cross_component[u * n + v] = u != v && d.values(u, v) == 0.0;
    }
  }
  return d;
}

}  // namespace lrange
