#include "lrange/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

#include "lrange/rng.hpp"

namespace lrange {

struct GraphBuilder {
  static Graph make(std::vector<std::size_t> offsets, std::vector<NodeId> neighbors) {
    return Graph(std::move(offsets), std::move(neighbors));
  }
};

namespace {

struct Canonical {
  std::vector<std::pair<NodeId, NodeId>> edges;
  std::size_t duplicates = 0;
  std::size_t self_loops = 0;
};

Canonical canonicalize(std::size_t n, std::span<const std::pair<NodeId, NodeId>> raw) {
  Canonical out;
  out.edges.reserve(raw.size());
  for (auto [u, v] : raw) {
    if (u >= n || v >= n) {
      throw std::out_of_range("edge (" + std::to_string(u) + "," + std::to_string(v) +
                              ") references a node id >= n = " + std::to_string(n));
    }
    if (u == v) {
      ++out.self_loops;
      continue;
    }
    out.edges.emplace_back(std::min(u, v), std::max(u, v));
  }
  std::sort(out.edges.begin(), out.edges.end());
  const auto last = std::unique(out.edges.begin(), out.edges.end());
  out.duplicates = static_cast<std::size_t>(out.edges.end() - last);
  out.edges.erase(last, out.edges.end());
  return out;
}

Graph from_canonical(std::size_t n, const std::vector<std::pair<NodeId, NodeId>>& edges);

void require_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument(std::string(name) + " must lie in [0, 1], got " +
                                std::to_string(p));
  }
}

}  // namespace

Graph Graph::from_edges(std::size_t n, std::span<const std::pair<NodeId, NodeId>> edges) {
  return from_canonical(n, canonicalize(n, edges).edges);
}

namespace {

Graph from_canonical(std::size_t n, const std::vector<std::pair<NodeId, NodeId>>& edges) {
  std::vector<std::size_t> deg(n, 0);
  for (auto [u, v] : edges) {
    ++deg[u];
    ++deg[v];
  }
  std::vector<std::size_t> offsets(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) offsets[i + 1] = offsets[i] + deg[i];
  std::vector<NodeId> nbrs(offsets[n]);
  std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
  for (auto [u, v] : edges) {
    nbrs[cursor[u]++] = v;
    nbrs[cursor[v]++] = u;
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::sort(nbrs.begin() + static_cast<std::ptrdiff_t>(offsets[i]),
              nbrs.begin() + static_cast<std::ptrdiff_t>(offsets[i + 1]));
  }
  return GraphBuilder::make(std::move(offsets), std::move(nbrs));
}

}  // namespace

bool Graph::has_edge(NodeId u, NodeId v) const {
  const auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

std::vector<std::pair<NodeId, NodeId>> Graph::edges() const {
  std::vector<std::pair<NodeId, NodeId>> out;
  out.reserve(num_edges());
  for (NodeId u = 0; u < num_nodes(); ++u)
    for (NodeId v : neighbors(u))
      if (u < v) out.emplace_back(u, v);
  return out;
}

Matrix Graph::adjacency() const {
  const std::size_t n = num_nodes();
  Matrix a(n, n);
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v : neighbors(u)) a(u, v) = 1.0;
  return a;
}

Matrix Graph::laplacian() const {
  const std::size_t n = num_nodes();
  Matrix l(n, n);
  for (NodeId u = 0; u < n; ++u) {
    l(u, u) = static_cast<double>(degree(u));
    for (NodeId v : neighbors(u)) l(u, v) = -1.0;
  }
  return l;
}

Graph Graph::with_virtual_node() const {
  const std::size_t n = num_nodes();
  auto e = edges();
  for (NodeId u = 0; u < n; ++u) e.emplace_back(u, n);
  return from_edges(n + 1, e);
}

Graph Graph::induced(std::span<const NodeId> nodes) const {
  std::vector<std::size_t> local(num_nodes(), std::numeric_limits<std::size_t>::max());
  for (std::size_t i = 0; i < nodes.size(); ++i) local[nodes[i]] = i;
  std::vector<std::pair<NodeId, NodeId>> e;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (NodeId v : neighbors(nodes[i]))
      if (local[v] != std::numeric_limits<std::size_t>::max() && i < local[v])
        e.emplace_back(i, local[v]);
  return from_edges(nodes.size(), e);
}

std::vector<std::vector<NodeId>> ComponentLabeling::members() const {
  std::vector<std::vector<NodeId>> out(count);
  for (NodeId u = 0; u < label.size(); ++u) out[label[u]].push_back(u);
  return out;
}

Graph build_line(std::size_t n) {
  if (n == 0) throw std::invalid_argument("build_line: n must be >= 1");
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  return Graph::from_edges(n, e);
}

Graph build_cycle(std::size_t n) {
  if (n < 3) throw std::invalid_argument("build_cycle: n must be >= 3");
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
  return Graph::from_edges(n, e);
}

Graph build_grid2d(std::size_t h, std::size_t w) {
  if (h == 0 || w == 0) throw std::invalid_argument("build_grid2d: dimensions must be >= 1");
  std::vector<std::pair<NodeId, NodeId>> e;
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      const NodeId id = r * w + c;
      if (c + 1 < w) e.emplace_back(id, id + 1);
      if (r + 1 < h) e.emplace_back(id, id + w);
    }
  }
  return Graph::from_edges(h * w, e);
}

Graph build_erdos_renyi(std::size_t n, double p, std::uint64_t seed) {
  require_probability(p, "build_erdos_renyi: p");
  const std::size_t block[] = {n};
  return build_sbm(block, p, p, seed);
}

Graph build_sbm(std::span<const std::size_t> block_sizes, double p_intra, double p_inter,
                std::uint64_t seed) {
  if (block_sizes.empty()) throw std::invalid_argument("build_sbm: empty block list");
  require_probability(p_intra, "build_sbm: p_intra");
  require_probability(p_inter, "build_sbm: p_inter");
  std::vector<std::size_t> block_of;
  for (std::size_t b = 0; b < block_sizes.size(); ++b) {
    if (block_sizes[b] == 0) throw std::invalid_argument("build_sbm: block sizes must be >= 1");
    block_of.insert(block_of.end(), block_sizes[b], b);
  }
  const std::size_t n = block_of.size();
  Philox rng(seed);
  std::vector<std::pair<NodeId, NodeId>> e;
  // Pairs are visited in a fixed (u, v) lexicographic order, one draw each.
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = u + 1; v < n; ++v) {
      const double p = block_of[u] == block_of[v] ? p_intra : p_inter;
      if (rng.uniform() < p) e.emplace_back(u, v);
    }
  }
  return Graph::from_edges(n, e);
}

EdgeListParse from_edge_list(std::string_view text) {
  std::vector<std::pair<long long, long long>> pairs;
  long long header[2] = {-1, -1};
  bool have_header = false;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    long long vals[2];
    int count = 0;
    std::size_t pos = 0;
    auto fail = [&](const std::string& why) {
      throw std::invalid_argument("edge list line " + std::to_string(line_no) + ": " + why);
    };
    while (true) {
      while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' || line[pos] == '\r'))
        ++pos;
      if (pos >= line.size()) break;
      if (count == 2) fail("expected exactly two integers");
      const auto* first = line.data() + pos;
      const auto* last = line.data() + line.size();
      auto [ptr, ec] = std::from_chars(first, last, vals[count]);
      if (ec != std::errc{} || (ptr != last && *ptr != ' ' && *ptr != '\t' && *ptr != '\r'))
        fail("malformed integer");
      pos = static_cast<std::size_t>(ptr - line.data());
      ++count;
    }
    if (count == 0) continue;
    if (count != 2) fail("expected exactly two integers");
    if (vals[0] < 0 || vals[1] < 0) fail("negative value");
    if (!have_header) {
      header[0] = vals[0];
      header[1] = vals[1];
      have_header = true;
    } else {
      pairs.emplace_back(vals[0], vals[1]);
    }
  }
  if (!have_header) throw std::invalid_argument("edge list: missing 'n m' header");
  const auto n = static_cast<std::size_t>(header[0]);
  if (pairs.size() != static_cast<std::size_t>(header[1])) {
    throw std::invalid_argument("edge list: header declares " + std::to_string(header[1]) +
                                " edges, found " + std::to_string(pairs.size()));
  }
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (auto [u, v] : pairs) {
    if (static_cast<std::size_t>(u) >= n || static_cast<std::size_t>(v) >= n) {
      throw std::out_of_range("edge list: node id out of range in edge (" + std::to_string(u) +
                              "," + std::to_string(v) + ") for n = " + std::to_string(n));
    }
    edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
  }
  auto canon = canonicalize(n, edges);
  EdgeListParse out;
  out.duplicates_dropped = canon.duplicates;
  out.self_loops_dropped = canon.self_loops;
  out.graph = from_canonical(n, canon.edges);
  return out;
}

std::string to_edge_list(const Graph& g) {
  std::string out = std::to_string(g.num_nodes()) + " " + std::to_string(g.num_edges()) + "\n";
  for (auto [u, v] : g.edges()) out += std::to_string(u) + " " + std::to_string(v) + "\n";
  return out;
}

Matrix sym_norm_adjacency(const Graph& g, bool self_loops) {
  const std::size_t n = g.num_nodes();
  if (n == 0) throw std::invalid_argument("sym_norm_adjacency: empty graph");
  std::vector<double> inv_sqrt(n, 0.0);
  for (NodeId u = 0; u < n; ++u) {
    const double d = static_cast<double>(g.degree(u)) + (self_loops ? 1.0 : 0.0);
    inv_sqrt[u] = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
  }
  Matrix a(n, n);
  for (NodeId u = 0; u < n; ++u) {
    if (self_loops) a(u, u) = inv_sqrt[u] * inv_sqrt[u];
    for (NodeId v : g.neighbors(u)) {
      if (v < u) continue;
      const double w = inv_sqrt[u] * inv_sqrt[v];
      a(u, v) = w;
      a(v, u) = w;
    }
  }
  return a;
}

std::vector<std::vector<NodeId>> khop_shells(const Graph& g, NodeId u, std::size_t kmax) {
  if (u >= g.num_nodes()) {
    throw std::out_of_range("khop_shells: node " + std::to_string(u) + " not in graph of " +
                            std::to_string(g.num_nodes()) + " nodes");
  }
  std::vector<std::vector<NodeId>> shells(kmax);
  if (kmax == 0) return shells;
  std::vector<bool> seen(g.num_nodes(), false);
  seen[u] = true;
  std::vector<NodeId> frontier{u};
  for (std::size_t r = 0; r < kmax && !frontier.empty(); ++r) {
    std::vector<NodeId> next;
    for (NodeId x : frontier)
      for (NodeId y : g.neighbors(x))
        if (!seen[y]) {
          seen[y] = true;
          next.push_back(y);
        }
    std::sort(next.begin(), next.end());
    shells[r] = next;
    frontier = std::move(next);
  }
  return shells;
}

std::vector<NodeId> khop_neighborhood(const Graph& g, NodeId u, std::size_t k) {
  std::vector<NodeId> out;
  for (const auto& shell : khop_shells(g, u, k)) out.insert(out.end(), shell.begin(), shell.end());
  std::sort(out.begin(), out.end());
  return out;
}

ComponentLabeling connected_components(const Graph& g) {
  const std::size_t n = g.num_nodes();
  constexpr std::size_t kUnset = std::numeric_limits<std::size_t>::max();
  ComponentLabeling out;
  out.label.assign(n, kUnset);
  std::deque<NodeId> queue;
  for (NodeId s = 0; s < n; ++s) {
    if (out.label[s] != kUnset) continue;
    out.label[s] = out.count;
    queue.push_back(s);
    while (!queue.empty()) {
      const NodeId x = queue.front();
      queue.pop_front();
      for (NodeId y : g.neighbors(x))
        if (out.label[y] == kUnset) {
          out.label[y] = out.count;
          queue.push_back(y);
        }
    }
    ++out.count;
  }
  return out;
}

}  // namespace lrange
