#include <doctest.h>

#include <cmath>
#include <random>

#include "dln/absorbing.hpp"
#include "dln/error.hpp"
#include "dln/landscape.hpp"
#include "dln/objective.hpp"
#include "dln/oracle.hpp"
#include "helpers.hpp"

using namespace dln;
using dln::test::random_matrix;
using dln::test::scalar_net;

namespace {

CompletionProblem scalar_problem(double target) {
  Matrix t(1, 1);
  t << target;
  return CompletionProblem(t, {{0, 0}});
}

double relative_error(const LayerGradients& a, const LayerGradients& b) {
  double diff = 0.0;
  for (std::size_t k = 0; k < a.layers.size(); ++k)
    diff += (a.layers[k] - b.layers[k]).squaredNorm();
  return std::sqrt(diff) / std::max(1e-12, b.norm());
}

CompletionProblem random_problem(int rows, int cols, std::mt19937_64& rng) {
  const Matrix target = random_matrix(rows, cols, rng, -2.0, 2.0);
  std::vector<Entry> observed;
  std::bernoulli_distribution keep(0.6);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      if (keep(rng)) observed.push_back({i, j});
  if (observed.empty()) observed.push_back({0, 0});
  return CompletionProblem(target, observed);
}

}  // namespace

TEST_CASE("completion problem invariants") {
  const CompletionProblem p = CompletionProblem::two_by_two(0.25);
  CHECK(p.count() == 3);
  CHECK(p.c1() == 1.0);
  CHECK(p.target()(0, 1) == 4.0);
  CHECK(!p.is_observed({0, 1}));
  CHECK(p.is_observed({1, 0}));
  CHECK(!p.is_observed({2, 0}));
  REQUIRE(p.missing().size() == 1);
  CHECK(p.missing()[0] == Entry{0, 1});
  CHECK(p.mask().sum() == 3.0);

  Matrix t(2, 2);
  t << 3.0, -5.0, 0.5, 1.0;
  const CompletionProblem q(t, {{0, 0}, {1, 1}});
  CHECK(q.c1() == 9.0);

  CHECK_THROWS_AS(CompletionProblem(t, {}), UsageError);
  CHECK_THROWS_AS(CompletionProblem(t, {{0, 0}, {0, 0}}), UsageError);
  CHECK_THROWS_AS(CompletionProblem(t, {{2, 0}}), UsageError);
  CHECK_THROWS_AS(CompletionProblem::two_by_two(0.0), UsageError);
}

TEST_CASE("cost") {
  const CompletionProblem p = CompletionProblem::two_by_two(0.25);
  CHECK(cost(p.target(), p) == 0.0);
  CHECK(cost(Matrix::Zero(2, 2), p) == doctest::Approx(0.34375).epsilon(1e-15));

  // Unobserved entries do not count.
  Matrix a = p.target();
  a(0, 1) = -100.0;
  CHECK(cost(a, p) == 0.0);

  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const CompletionProblem q = random_problem(3, 4, rng);
    const Matrix m = random_matrix(3, 4, rng);
    const Matrix doubled = q.target() + 2.0 * (m - q.target());
    CHECK(cost(doubled, q) == doctest::Approx(4.0 * cost(m, q)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(cost(Matrix::Zero(3, 2), p), StructuralError);
}

TEST_CASE("regularized loss") {
  const CompletionProblem p = CompletionProblem::two_by_two(0.25);
  const ArchSpec arch = ArchSpec::uniform(3, 2, 2, 2);
  const NetworkParams fit = balanced_factorization(p.target(), arch);
  CHECK(regularized_loss(fit, p, 0.0) < 1e-28);
  CHECK(regularized_loss(NetworkParams::zeros(arch), p, 0.3) == doctest::Approx(0.34375));
  CHECK(regularized_loss(fit, p, 0.1) == doctest::Approx(0.7871313467232256).epsilon(1e-12));
  CHECK_THROWS_AS(regularized_loss(fit, p, -1.0), UsageError);
}

TEST_CASE("entry residual") {
  const CompletionProblem p = CompletionProblem::two_by_two(0.25);
  const ArchSpec arch = ArchSpec::uniform(3, 2, 2, 2);
  const NetworkParams fit = balanced_factorization(p.target(), arch);
  CHECK(entry_residual(fit, p, {1, 0}).norm() < 1e-14);

  const Matrix g = entry_residual(NetworkParams::zeros(arch), p, {0, 0});
  Matrix expected = Matrix::Zero(2, 2);
  expected(0, 0) = -1.0;
  CHECK(g == expected);

  CHECK_THROWS_AS(entry_residual(fit, p, {0, 1}), UsageError);
}

TEST_CASE("residual bound on capped parameters") {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const CompletionProblem p = CompletionProblem::two_by_two(0.25);
  int violations = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const double cap = 0.5 + 3.0 * u(rng);
    NetworkParams theta = init_gaussian(ArchSpec::uniform(3, 2, 3, 2), 1.0, trial);
    for (auto& w : theta.weights) w *= std::sqrt(cap * u(rng)) / w.norm();
    for (const Entry& e : p.observed()) {
      const double g = entry_residual(theta, p, e).squaredNorm();
      if (g > 2.0 * (p.c1() + std::pow(cap, 3))) ++violations;
    }
  }
  CHECK(violations == 0);
}

TEST_CASE("layer gradient") {
  const NetworkParams net = scalar_net(2.0, 3.0);
  const CompletionProblem p = scalar_problem(1.0);
  const Matrix g = entry_residual(net, p, {0, 0});
  CHECK(g(0, 0) == 5.0);
  CHECK(layer_gradient(net, g, 0)(0, 0) == 15.0);
  CHECK(layer_gradient(net, g, 1)(0, 0) == 10.0);
  CHECK(layer_gradient(net, Matrix::Zero(1, 1), 0)(0, 0) == 0.0);
  CHECK_THROWS_AS(layer_gradient(net, g, 2), UsageError);
  CHECK_THROWS_AS(layer_gradient(net, g, -1), UsageError);

  SUBCASE("per-entry term is the gradient of half the squared residual") {
    std::mt19937_64 rng(41);
    const CompletionProblem q = random_problem(3, 2, rng);
    const NetworkParams theta = init_gaussian(ArchSpec{3, {2, 4, 3, 3}}, 1.0, 5);
    const Entry e = q.observed()[0];
    const CompletionProblem single(q.target(), {e});
    const Matrix ge = entry_residual(theta, q, e);
    // With N = 1, C is exactly (1/2)(A*_ij − A_ij)².
    const LayerGradients fd = fd_gradient(theta, single, 0.0);
    LayerGradients analytic;
    for (int k = 0; k < 3; ++k) analytic.layers.push_back(layer_gradient(theta, ge, k));
    CHECK(relative_error(analytic, fd) <= 1e-6);
  }
}

TEST_CASE("full gradient against finite differences") {
  std::mt19937_64 rng(43);
  std::uniform_int_distribution<int> dim(1, 4);
  std::uniform_int_distribution<int> depth(2, 4);
  for (int trial = 0; trial < 50; ++trial) {
    const int d_in = dim(rng), d_out = dim(rng), depth_l = depth(rng);
    ArchSpec arch;
    arch.depth = depth_l;
    arch.widths.push_back(d_in);
    for (int k = 1; k < depth_l; ++k) arch.widths.push_back(std::max(std::min(d_in, d_out), dim(rng)));
    arch.widths.push_back(d_out);
    const CompletionProblem p = random_problem(d_out, d_in, rng);
    const NetworkParams theta = init_gaussian(arch, 1.0, 1000 + trial);
    const double lambda = trial % 2 ? 0.1 : 0.0;
    const LayerGradients analytic = full_gradient(theta, p, lambda);
    const LayerGradients fd = fd_gradient(theta, p, lambda);
    CHECK(relative_error(analytic, fd) <= 1e-6);
  }
}

TEST_CASE("full gradient examples") {
  const CompletionProblem p = CompletionProblem::two_by_two(0.25);
  const ArchSpec arch = ArchSpec::uniform(3, 2, 2, 2);
  CHECK(full_gradient(balanced_factorization(p.target(), arch), p, 0.0).norm() < 1e-13);

  const ConvergeResult m = converge(init_gaussian(arch, 1.0, 3), p, 0.01, 0.05, 1e-10, 500000);
  REQUIRE(m.converged);
  CHECK(full_gradient(m.params, p, 0.01).norm() <= 1e-10);
  CHECK(full_gradient(m.params, p, 0.01).layers.size() == 3);
}

TEST_CASE("stationary points are balanced") {
  const CompletionProblem p = CompletionProblem::two_by_two(0.25);
  for (int seed = 0; seed < 5; ++seed) {
    const ConvergeResult m = converge(init_gaussian(ArchSpec::uniform(3, 2, 3, 2), 1.0, seed), p,
                                      0.1, 0.05, 1e-10, 500000);
    REQUIRE(m.converged);
    CHECK(balance_error(m.params).max_spectral <= 1e-6);
  }
}
