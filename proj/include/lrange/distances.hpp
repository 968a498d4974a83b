#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "lrange/graph.hpp"
#include "lrange/matrix.hpp"

namespace lrange {

enum class Metric { kSpd, kResistance };

/// "SPD" / "RES"
std::string_view metric_tag(Metric m);
/// Accepts spd|res|resistance (case-insensitive).
Metric parse_metric(std::string_view s);

/// All-pairs node distances for one metric.
///
/// Pairs in different connected components carry distance 0 and are flagged
/// in `cross_component`, so callers can audit how much influence mass the
/// convention discards.
struct DistanceMatrix {
  Metric metric = Metric::kSpd;
  Matrix values;
  std::vector<bool> cross_component;  // row-major n*n

  std::size_t size() const { return values.rows(); }
  double operator()(std::size_t u, std::size_t v) const { return values(u, v); }
  bool is_cross_component(std::size_t u, std::size_t v) const {
    return cross_component[u * size() + v];
  }
  double max_entry() const { return values.max_abs(); }
};

DistanceMatrix spd_all_pairs(const Graph& g);

/// Effective resistance per connected component, computed from the
/// pseudoinverse of the component-induced Laplacian. Throws NumericalError
/// if a component Laplacian's kernel is not one-dimensional.
DistanceMatrix resistance_all_pairs(const Graph& g);

DistanceMatrix distances(const Graph& g, Metric metric);

/// Laplacian pseudoinverse for the whole graph; its kernel dimension is
/// cross-checked against the component count.
Matrix laplacian_pseudo_inverse(const Graph& g);

/// CSV dump: header "metric=<SPD|RES> n=<n>", then n comma-separated rows.
std::string to_csv(const DistanceMatrix& d);
DistanceMatrix distance_matrix_from_csv(std::string_view text);

}  // namespace lrange
