#include <doctest.h>

#include <cmath>

#include "lrange/distances.hpp"
#include "lrange/range.hpp"
#include "lrange/rng.hpp"
#include "lrange/tasks.hpp"
#include "oracles.hpp"

using namespace lrange;

namespace {

Matrix gaussian(std::size_t n, Philox& rng) {
  Matrix x(n, 1);
  for (double& v : x.values()) v = rng.normal();
  return x;
}

double spd_range(const LinearTask& t, const Graph& g, std::size_t u) {
  return node_range(t.jacobian(), spd_all_pairs(g)).node_ranges[u];
}

}  // namespace

TEST_CASE("k-power examples") {
  const Graph p3 = build_line(3);
  CHECK(k_power(p3, 0, false).weights == Matrix::identity(3));
  const auto id = node_range(k_power(p3, 0, false).jacobian(), spd_all_pairs(p3));
  for (double r : id.node_ranges) CHECK(r == 0.0);

  const auto k1 = node_range(k_power(p3, 1, false).jacobian(), spd_all_pairs(p3));
  for (double r : k1.node_ranges) CHECK(r == doctest::Approx(1.0).epsilon(1e-14));

  const LinearTask k2 = k_power(p3, 2, false);
  const auto w = influence_from_jacobian(k2.jacobian(), 0).weights;
  CHECK(w[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(w[1] == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(w[2] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(spd_range(k2, p3, 0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("k-rectangle and k-dirac examples") {
  const Graph l9 = build_line(9);
  const LinearTask rect = k_rectangle(l9, 2);
  for (std::size_t v = 0; v < 9; ++v) {
    const bool inside = v == 2 || v == 3 || v == 5 || v == 6;
    CHECK(rect.weights(4, v) == (inside ? 0.25 : 0.0));
  }
  CHECK(spd_range(rect, l9, 4) == doctest::Approx(1.5).epsilon(1e-14));

  const LinearTask sat = k_rectangle(l9, 20);
  for (std::size_t v = 0; v < 9; ++v) CHECK(sat.weights(0, v) == (v == 0 ? 0.0 : 1.0 / 8.0));

  const std::pair<NodeId, NodeId> e[] = {{0, 1}};
  const Graph iso = Graph::from_edges(3, e);
  CHECK(node_range(k_rectangle(iso, 1).jacobian(), spd_all_pairs(iso)).degenerate_count == 1);

  const LinearTask dirac = k_dirac(l9, 2);
  for (std::size_t v = 0; v < 9; ++v) CHECK(dirac.weights(0, v) == (v == 2 ? 1.0 : 0.0));
  const auto far = node_range(k_dirac(l9, 6).jacobian(), spd_all_pairs(l9));
  CHECK(far.node_ranges[4] == 0.0);
  CHECK(far.degenerate_count == 3);  // nodes 3, 4, 5 have no 6-hop shell

  for (std::uint64_t s = 0; s < 5; ++s) {
    const Graph g = build_erdos_renyi(30, 0.15, s);
    for (unsigned k = 1; k <= 3; ++k) {
      const auto r = node_range(k_dirac(g, k).jacobian(), spd_all_pairs(g));
      for (std::size_t u = 0; u < 30; ++u)
        if (!khop_shells(g, u, k)[k - 1].empty()) CHECK(r.node_ranges[u] == doctest::Approx(k).epsilon(1e-14));
    }
  }
}

TEST_CASE("linear task ranges agree with the direct sums") {
  for (std::uint64_t s = 0; s < 6; ++s) {
    const Graph g = build_erdos_renyi(18, 0.2, s);
    for (Metric m : {Metric::kSpd, Metric::kResistance}) {
      const auto d = distances(g, m);
      for (unsigned k = 0; k <= 4; ++k) {
        std::vector<LinearTask> tasks{k_power(g, k, s % 2 == 0)};
        if (k > 0) {
          tasks.push_back(k_rectangle(g, k));
          tasks.push_back(k_dirac(g, k));
        }
        for (const auto& t : tasks) {
          const auto un = node_range(t.jacobian(), d, false);
          const auto nr = node_range(t.jacobian(), d, true);
          for (std::size_t u = 0; u < 18; ++u) {
            const auto o = oracle::row_range(t.weights, d.values, u);
            CHECK(std::abs(un.node_ranges[u] - o.unnormalized) <= 1e-12);
            CHECK(std::abs(nr.node_ranges[u] - o.normalized) <= 1e-12);
          }
        }
      }
    }
  }
}

TEST_CASE("family ordering and monotonicity on lines") {
  const Graph g = build_line(40);
  const auto d = spd_all_pairs(g);
  double prev_p = 0, prev_r = 0, prev_d = 0;
  for (unsigned k = 1; k <= 10; ++k) {
    const auto p = node_range(k_power(g, k, true).jacobian(), d);
    const auto r = node_range(k_rectangle(g, k).jacobian(), d);
    const auto dd = node_range(k_dirac(g, k).jacobian(), d);
    for (std::size_t u = k; u + k < 40; ++u) {
      if (k >= 2) {
        CHECK(dd.node_ranges[u] >= r.node_ranges[u]);
        CHECK(r.node_ranges[u] >= p.node_ranges[u]);
      }
    }
    CHECK(p.graph_range >= prev_p);
    CHECK(r.graph_range >= prev_r);
    CHECK(dd.graph_range >= prev_d);
    prev_p = p.graph_range;
    prev_r = r.graph_range;
    prev_d = dd.graph_range;
  }
}

TEST_CASE("analytic ranges") {
  const Graph l9 = build_line(9);
  CHECK(analytic_node_range(l9, 4, 2) == 1.5);
  CHECK(analytic_graph_range(l9, 4, 2) == 0.75);
  CHECK(analytic_graph_range(l9, 4, 1) == 0.5);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Graph g = build_erdos_renyi(25, 0.12, s);
    for (NodeId u = 0; u < 25; ++u) {
      if (g.degree(u) == 0) {
        CHECK_THROWS(analytic_node_range(g, u, 1));
        continue;
      }
      CHECK(analytic_node_range(g, u, 1) == 1.0);
      for (unsigned k = 1; k < 6; ++k) {
        const double a = analytic_node_range(g, u, k), b = analytic_node_range(g, u, k + 1);
        CHECK(analytic_graph_range(g, u, k) == a / 2);
        if (khop_shells(g, u, k + 1)[k].empty()) {
          CHECK(b == a);
        } else {
          CHECK(b > a);
        }
      }
    }
  }
}

TEST_CASE("squared difference node task: outputs and Jacobian") {
  const Graph g = build_line(9);
  const auto spec = squared_difference_node_spec(g, 2);
  const auto flat = pairwise_node_task(spec, g, Matrix(9, 1, 0.7));
  CHECK(flat.outputs.max_abs() == 0.0);
  CHECK(node_range(flat.jacobian, spd_all_pairs(g)).degenerate_count == 9);

  Philox rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 4 + rng.below(17);
    const Graph h = build_erdos_renyi(n, 0.25, rng.next_u64());
    const auto s = squared_difference_node_spec(h, 1 + static_cast<unsigned>(rng.below(3)));
    const Matrix x = gaussian(n, rng);
    const auto res = pairwise_node_task(s, h, x);
    CHECK(res.outputs == pairwise_node_outputs(s, x));
    const Matrix fd = oracle::jacobian_fd([&](const Matrix& z) { return pairwise_node_outputs(s, z); }, x, 1e-5);
    for (std::size_t u = 0; u < n; ++u)
      for (std::size_t v = 0; v < n; ++v) {
        const double exact = res.jacobian.at(u, 0, v, 0);
        CHECK(oracle::rel_err(exact, fd(u, v)) < 1e-6);
      }
  }
}

TEST_CASE("squared difference graph task: Hessian") {
  Philox rng(22);
  const Graph l9 = build_line(9);
  const auto spec = squared_difference_graph_spec(l9, 2);
  const auto h1 = pairwise_graph_task(spec, l9, gaussian(9, rng));
  const auto h2 = pairwise_graph_task(spec, l9, gaussian(9, rng));
  CHECK(h1.hessian.values() == h2.hessian.values());
  CHECK(h1.hessian.at(4, 0, 4, 0, 0) == doctest::Approx(16.0 / 9.0));
  CHECK(h1.hessian.at(4, 0, 6, 0, 0) == doctest::Approx(-4.0 / 9.0));
  CHECK(h1.hessian.at(4, 0, 7, 0, 0) == 0.0);

  const auto eta = hessian_node_range(h1.hessian, spd_all_pairs(l9));
  CHECK(std::abs(eta.node_ranges[4] - 0.75) <= 1e-12);

  // The single-edge value follows from the definition: off-diagonal 4/2 at
  // distance 1 against a normalizer that also holds the diagonal 4/2.
  const Graph edge = build_line(2);
  const auto he = pairwise_graph_task(squared_difference_graph_spec(edge, 1), edge, gaussian(2, rng));
  const double expected_single_edge = (4.0 / 2.0 * 1.0) / (4.0 / 2.0 + 4.0 / 2.0);
  const auto eta_edge = hessian_node_range(he.hessian, spd_all_pairs(edge));
  CHECK(eta_edge.node_ranges[0] == doctest::Approx(expected_single_edge).epsilon(1e-14));
  CHECK(eta_edge.node_ranges[1] == doctest::Approx(0.5).epsilon(1e-14));

  for (int trial = 0; trial < 8; ++trial) {
    const std::size_t n = 4 + rng.below(12);
    const Graph g = build_erdos_renyi(n, 0.3, rng.next_u64());
    for (const auto& s : {squared_difference_graph_spec(g, 2), power_weighted_graph_spec(g, 3, true)}) {
      const Matrix x = gaussian(n, rng);
      const auto res = pairwise_graph_task(s, g, x);
      CHECK(res.outputs == pairwise_graph_outputs(s, x));
      const Matrix fd = oracle::hessian_fd([&](const Matrix& z) { return pairwise_graph_outputs(s, z)[0]; }, x, 1e-3);
      for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = 0; v < n; ++v) {
          const double exact = res.hessian.at(u, 0, v, 0, 0);
          CHECK(std::abs(exact - fd(u, v)) <= 1e-6 * std::max(1.0, std::abs(exact)));
        }
    }
  }
}

TEST_CASE("closed-form graph range at the line(9) centre") {
  const Graph l9 = build_line(9);
  const auto d = spd_all_pairs(l9);
  for (unsigned k = 1; k <= 3; ++k) {
    // Direct sum from the shell sizes of a path: two nodes per shell.
    double num = 0.0, count = 0.0;
    for (unsigned r = 1; r <= k; ++r) {
      num += 2.0 * r;
      count += 2.0;
    }
    const double hand = num / (2.0 * count);
    const auto h = pairwise_graph_task(squared_difference_graph_spec(l9, k), l9, Matrix(9, 1, 1.0));
    const double eta = hessian_node_range(h.hessian, d).node_ranges[4];
    CHECK(std::abs(analytic_graph_range(l9, 4, k) - hand) <= 1e-12);
    CHECK(std::abs(eta - hand) <= 1e-12);
  }
}

TEST_CASE("monte carlo mean of the squared difference node range") {
  const Graph l9 = build_line(9);
  const auto spec = squared_difference_node_spec(l9, 2);
  const auto d = spd_all_pairs(l9);
  Philox rng(2024);
  const int draws = 4000;
  double sum = 0.0, sumsq = 0.0, with_self = 0.0;
  for (int i = 0; i < draws; ++i) {
    const auto res = pairwise_node_task(spec, l9, gaussian(9, rng));
    const double r = node_range(res.jacobian, d, true, SelfInfluence::kExclude).node_ranges[4];
    sum += r;
    sumsq += r * r;
    with_self += node_range(res.jacobian, d).node_ranges[4];
  }
  const double mean = sum / draws;
  const double se = std::sqrt((sumsq / draws - mean * mean) / draws);
  CHECK(std::abs(mean - 1.5) <= 2.0 * se);
  // The self-derivative adds normalizer mass at distance 0 and pulls the mean down.
  CHECK(with_self / draws < mean - 0.3);
}

TEST_CASE("task json round trip") {
  const Graph g = build_line(7);
  for (const auto& t : {k_power(g, 3, true), k_rectangle(g, 2), k_dirac(g, 2)}) {
    const LinearTask back = linear_task_from_json(to_json(t), g);
    CHECK(back.weights == t.weights);
    CHECK(back.family == t.family);
    CHECK(back.k == t.k);
  }
  CHECK(parse_family(family_name(TaskFamily::kRectangle)) == TaskFamily::kRectangle);
}
