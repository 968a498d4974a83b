#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lrange/matrix.hpp"

namespace lrange {

using NodeId = std::size_t;

/// Undirected simple graph in compressed neighbor-list form.
///
/// Immutable after construction. Neighbor lists are sorted, symmetric, and
/// free of self-loops and duplicates.
class Graph {
 public:
  Graph() = default;
  /// Builds from an edge list; self-loops and duplicate pairs (in either
  /// orientation) are dropped. Ids must be < n.
  static Graph from_edges(std::size_t n, std::span<const std::pair<NodeId, NodeId>> edges);

  std::size_t num_nodes() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t num_edges() const { return neighbors_.size() / 2; }

  std::span<const NodeId> neighbors(NodeId u) const {
    return {neighbors_.data() + offsets_[u], offsets_[u + 1] - offsets_[u]};
  }
  std::size_t degree(NodeId u) const { return offsets_[u + 1] - offsets_[u]; }
  bool has_edge(NodeId u, NodeId v) const;

  /// Unordered edges with u < v, sorted.
  std::vector<std::pair<NodeId, NodeId>> edges() const;
  /// Dense 0/1 adjacency.
  Matrix adjacency() const;
  /// Combinatorial Laplacian D - A.
  Matrix laplacian() const;

  /// Copy with one extra node joined to every existing node.
  Graph with_virtual_node() const;
  /// Subgraph induced by `nodes`; node i of the result is nodes[i].
  Graph induced(std::span<const NodeId> nodes) const;

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  friend struct GraphBuilder;
  Graph(std::vector<std::size_t> offsets, std::vector<NodeId> neighbors)
      : offsets_(std::move(offsets)), neighbors_(std::move(neighbors)) {}

  std::vector<std::size_t> offsets_{0};
  std::vector<NodeId> neighbors_;
};

struct ComponentLabeling {
  std::vector<std::size_t> label;
  std::size_t count = 0;

  /// Node ids of each component, in increasing order.
  std::vector<std::vector<NodeId>> members() const;
};

Graph build_line(std::size_t n);
Graph build_cycle(std::size_t n);
Graph build_grid2d(std::size_t h, std::size_t w);
Graph build_erdos_renyi(std::size_t n, double p, std::uint64_t seed);
Graph build_sbm(std::span<const std::size_t> block_sizes, double p_intra, double p_inter,
                std::uint64_t seed);

struct EdgeListParse {
  Graph graph;
  std::size_t duplicates_dropped = 0;
  std::size_t self_loops_dropped = 0;
};

/// Parses "n m" followed by m lines "u v". '#' starts a comment.
EdgeListParse from_edge_list(std::string_view text);
std::string to_edge_list(const Graph& g);

/// Symmetric normalized adjacency, optionally with self-loops added first.
/// Zero-degree rows stay zero.
Matrix sym_norm_adjacency(const Graph& g, bool self_loops);

/// Shells r = 1..kmax around u: shells[r-1] holds the nodes at exactly r hops.
std::vector<std::vector<NodeId>> khop_shells(const Graph& g, NodeId u, std::size_t kmax);
/// Nodes within 1..k hops of u (u itself excluded), sorted.
std::vector<NodeId> khop_neighborhood(const Graph& g, NodeId u, std::size_t k);

ComponentLabeling connected_components(const Graph& g);

}  // namespace lrange
