#include <doctest.h>

#include <cmath>

#include "lrange/distances.hpp"
#include "lrange/range.hpp"
#include "lrange/rng.hpp"
#include "lrange/tasks.hpp"
#include "oracles.hpp"

using namespace lrange;

namespace {

double rho(const Matrix& l, const DistanceMatrix& d, std::size_t u, bool normalized) {
  return node_range(JacobianTensor::from_matrix(l), d, normalized).node_ranges[u];
}

Matrix unit(std::size_t n, std::size_t u, std::size_t v) {
  Matrix m(n, n);
  m(u, v) = 1.0;
  return m;
}

/// Random sparse matrix whose entries are drawn only where `keep` says so.
Matrix random_support(std::size_t n, Philox& rng, double density,
                      const std::function<bool(std::size_t, std::size_t)>& keep) {
  Matrix m(n, n);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v)
      if (keep(u, v) && rng.uniform() < density) m(u, v) = rng.normal();
  return m;
}

double row_mass(const Matrix& m, std::size_t u) {
  double s = 0.0;
  for (double x : m.row(u)) s += std::abs(x);
  return s;
}

}  // namespace

TEST_CASE("influence distribution examples") {
  const auto id = influence_from_jacobian(JacobianTensor::from_matrix(Matrix::identity(4)), 2);
  CHECK(id.weights == std::vector<double>{0, 0, 1, 0});

  const auto p1 = influence_from_jacobian(k_power(build_line(3), 1, false).jacobian(), 1);
  CHECK(p1.weights[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(p1.weights[1] == 0.0);
  CHECK(p1.weights[2] == doctest::Approx(0.5).epsilon(1e-15));

  const auto zero = influence_from_jacobian(JacobianTensor::from_matrix(Matrix(3, 3)), 0);
  CHECK(zero.degenerate);
  for (double w : zero.weights) CHECK(w == 0.0);

  JacobianTensor masked = JacobianTensor::from_matrix(Matrix::identity(3));
  masked.out_node_mask = {true, false, true};
  CHECK_THROWS(influence_from_jacobian(masked, 1));
}

TEST_CASE("node_range examples") {
  const auto d = spd_all_pairs(build_line(5));
  CHECK(rho(unit(5, 1, 4), d, 1, false) == 3.0);
  CHECK(rho(unit(5, 1, 4), d, 1, true) == 3.0);

  const auto diag = node_range(JacobianTensor::from_matrix(Matrix::identity(5)), d);
  for (double r : diag.node_ranges) CHECK(r == 0.0);

  const Matrix a = k_power(build_line(3), 1, false).weights;
  const auto d3 = spd_all_pairs(build_line(3));
  const auto oracle_row = oracle::row_range(a, d3.values, 1);
  CHECK(oracle_row.unnormalized == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(rho(a, d3, 1, false) == doctest::Approx(oracle_row.unnormalized).epsilon(1e-14));
  CHECK(rho(a, d3, 1, true) == doctest::Approx(1.0).epsilon(1e-14));

  CHECK_THROWS(node_range(JacobianTensor::from_matrix(Matrix::identity(4)), d));
}

TEST_CASE("degenerate nodes count as zero in the graph mean") {
  Matrix l(3, 3);
  l(0, 2) = 1.0;
  const auto r = node_range(JacobianTensor::from_matrix(l), spd_all_pairs(build_line(3)));
  CHECK(r.degenerate_count == 2);
  CHECK(r.graph_range == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("excluding self-influence only changes the normalizer") {
  Matrix l(3, 3);
  l(1, 1) = 2.0;
  l(1, 0) = 1.0;
  l(1, 2) = 1.0;
  const auto d = spd_all_pairs(build_line(3));
  const auto jac = JacobianTensor::from_matrix(l);
  CHECK(node_range(jac, d).node_ranges[1] == doctest::Approx(0.5));
  CHECK(node_range(jac, d, true, SelfInfluence::kExclude).node_ranges[1] == doctest::Approx(1.0));
  CHECK(node_range(jac, d, false).node_ranges[1] == node_range(jac, d, false, SelfInfluence::kExclude).node_ranges[1]);
  CHECK(node_range(JacobianTensor::from_matrix(Matrix::identity(3)), d, true, SelfInfluence::kExclude).degenerate_count == 3);
}

TEST_CASE("multi-channel influence sums absolute values over channel pairs") {
  JacobianTensor j(2, 2, 3);
  j.at(0, 0, 1, 0) = -1.0;
  j.at(0, 1, 1, 2) = 2.0;
  j.at(0, 1, 0, 1) = 3.0;
  const auto inf = influence_from_jacobian(j, 0);
  CHECK(inf.normalizer == 6.0);
  CHECK(inf.weights[1] == doctest::Approx(0.5));
}

TEST_CASE("axioms on random linear tasks") {
  Philox rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(19);
    const Graph g = build_erdos_renyi(n, 0.3, rng.next_u64());
    const auto d = distances(g, trial % 2 == 0 ? Metric::kSpd : Metric::kResistance);
    const std::size_t u = rng.below(n);
    const std::size_t v = rng.below(n);
    const std::size_t w = (u + 1 + rng.below(n - 1)) % n;

    // (a) locality and (b) unit interaction
    CHECK(rho(unit(n, w, v), d, u, false) == 0.0);
    CHECK(rho(unit(n, u, v), d, u, false) == d(u, v));
    if (u != v) CHECK(rho(unit(n, u, v), d, u, true) == d(u, v));

    // disjoint supports: split the columns by parity of a random cut
    const std::size_t cut = rng.below(n);
    const Matrix l1 = random_support(n, rng, 0.5, [&](std::size_t, std::size_t c) { return c < cut; });
    const Matrix l2 = random_support(n, rng, 0.5, [&](std::size_t, std::size_t c) { return c >= cut; });
    const double r1 = rho(l1, d, u, false), r2 = rho(l2, d, u, false);

    // (c) additivity and (d) homogeneity
    CHECK(std::abs(rho(l1 + l2, d, u, false) - (r1 + r2)) <= 1e-10);
    const double alpha = rng.normal() * 3.0;
    CHECK(std::abs(rho(alpha * l1, d, u, false) - std::abs(alpha) * r1) <= 1e-10);

    // (e) mass-weighted mixture of normalized ranges
    const double m1 = row_mass(l1, u), m2 = row_mass(l2, u);
    if (m1 > 0.0 && m2 > 0.0) {
      const double a = rng.normal(), b = rng.normal();
      const double n1 = rho(l1, d, u, true), n2 = rho(l2, d, u, true);
      const double expected =
          (std::abs(a) * m1 * n1 + std::abs(b) * m2 * n2) / (std::abs(a) * m1 + std::abs(b) * m2);
      CHECK(std::abs(rho(a * l1 + b * l2, d, u, true) - expected) <= 1e-10);
    }

    // Row sums against the direct oracle.
    const auto direct = oracle::row_range(l1, d.values, u);
    CHECK(std::abs(r1 - direct.unnormalized) <= 1e-12 * std::max(1.0, direct.unnormalized));
  }
}

TEST_CASE("mixture of equal-mass components is the plain convex combination") {
  Philox rng(3);
  const auto d = spd_all_pairs(build_line(8));
  for (int t = 0; t < 20; ++t) {
    const std::size_t u = rng.below(8);
    Matrix l1(8, 8), l2(8, 8);
    l1(u, 0) = 1.0;
    l2(u, 7) = 1.0;
    const double a = rng.uniform();
    const double expected = a * rho(l1, d, u, true) + (1 - a) * rho(l2, d, u, true);
    if (u != 0 && u != 7) CHECK(std::abs(rho(a * l1 + (1 - a) * l2, d, u, true) - expected) <= 1e-12);
  }
}

TEST_CASE("normalization invariance, bounds and permutation equivariance") {
  Philox rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 3 + rng.below(15);
    const Graph g = build_erdos_renyi(n, 0.3, rng.next_u64());
    const auto d = distances(g, trial % 2 ? Metric::kSpd : Metric::kResistance);
    Matrix l(n, n);
    for (double& x : l.values()) x = rng.uniform() < 0.4 ? rng.normal() : 0.0;
    const auto base = node_range(JacobianTensor::from_matrix(l), d);
    const double alpha = (rng.uniform() + 0.1) * (rng.uniform() < 0.5 ? -5.0 : 5.0);
    const auto scaled = node_range(JacobianTensor::from_matrix(alpha * l), d);
    for (std::size_t u = 0; u < n; ++u) {
      CHECK(std::abs(scaled.node_ranges[u] - base.node_ranges[u]) <= 1e-12);
      double dmax = 0.0;
      for (std::size_t v = 0; v < n; ++v) dmax = std::max(dmax, d(u, v));
      CHECK(base.node_ranges[u] >= 0.0);
      CHECK(base.node_ranges[u] <= dmax + 1e-12);
    }

    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    Matrix pl(n, n);
    DistanceMatrix pd = d;
    for (std::size_t u = 0; u < n; ++u)
      for (std::size_t v = 0; v < n; ++v) {
        pl(perm[u], perm[v]) = l(u, v);
        pd.values(perm[u], perm[v]) = d(u, v);
      }
    const auto permuted = node_range(JacobianTensor::from_matrix(pl), pd);
    for (std::size_t u = 0; u < n; ++u)
      CHECK(std::abs(permuted.node_ranges[perm[u]] - base.node_ranges[u]) <= 1e-12);
  }
}

TEST_CASE("hessian node range") {
  const auto d = spd_all_pairs(build_line(5));
  const auto zero = hessian_node_range(HessianTensor::from_matrix(Matrix(5, 5)), d);
  CHECK(zero.degenerate_count == 5);
  CHECK(zero.graph_range == 0.0);

  // Single off-diagonal atom at v* plus a diagonal term.
  Matrix h(5, 5);
  const std::size_t u = 1, vstar = 4;
  const double off = 0.7, diag = 1.9;
  h(u, vstar) = h(vstar, u) = off;
  h(u, u) = diag;
  const auto r = hessian_node_range(HessianTensor::from_matrix(h), d);
  CHECK(r.node_ranges[u] == doctest::Approx(d(u, vstar) * off / (off + diag)).epsilon(1e-14));

  // Diagonal-only mass is not degenerate but has zero range.
  const auto diag_only = hessian_node_range(HessianTensor::from_matrix(Matrix::identity(5)), d);
  CHECK(diag_only.degenerate_count == 0);
  CHECK(diag_only.graph_range == 0.0);
}

TEST_CASE("dataset_range") {
  RangeReport a, b;
  a.graph_range = 1.0;
  b.graph_range = 3.0;
  CHECK(dataset_range(std::vector<RangeReport>{a}) == 1.0);
  CHECK(dataset_range(std::vector<RangeReport>{a, b}) == 2.0);
  b.metric = Metric::kResistance;
  CHECK_THROWS(dataset_range(std::vector<RangeReport>{a, b}));
  b.metric = Metric::kSpd;
  b.normalized = false;
  CHECK_THROWS(dataset_range(std::vector<RangeReport>{a, b}));
  CHECK_THROWS(dataset_range(std::vector<RangeReport>{}));
}

TEST_CASE("range report json round trip") {
  const Graph g = build_erdos_renyi(12, 0.3, 2);
  const auto r = node_range(k_rectangle(g, 2).jacobian(), resistance_all_pairs(g));
  const auto back = range_report_from_json(to_json(r));
  CHECK(back.metric == r.metric);
  CHECK(back.normalized == r.normalized);
  CHECK(back.node_ranges == r.node_ranges);
  CHECK(back.graph_range == r.graph_range);
  CHECK(back.degenerate_count == r.degenerate_count);
}
