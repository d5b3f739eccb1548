#include <doctest.h>

#include <cmath>
#include <random>

#include "dln/absorbing.hpp"
#include "dln/error.hpp"
#include "dln/oracle.hpp"
#include "helpers.hpp"

using namespace dln;
using dln::test::random_matrix;
using dln::test::random_symmetric;

namespace {

double gradient_gap(const LayerGradients& a, const LayerGradients& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.layers.size(); ++k) d += (a.layers[k] - b.layers[k]).squaredNorm();
  return std::sqrt(d);
}

const ArchSpec kArch3 = ArchSpec::uniform(3, 2, 2, 2);

}  // namespace

TEST_CASE("finite-difference gradient") {
  const CompletionProblem p = CompletionProblem::two_by_two(0.25);
  SUBCASE("zero at an interpolating point") {
    const NetworkParams fit = balanced_factorization(p.target(), kArch3);
    CHECK(fd_gradient(fit, p, 0.0).norm() < 1e-9);
  }
  SUBCASE("exact up to rounding for any h") {
    // The loss is quadratic in each single weight, so central differences carry no truncation error.
    const NetworkParams theta = init_gaussian(ArchSpec::uniform(3, 2, 3, 2), 1.0, 2);
    const LayerGradients exact = full_gradient(theta, p, 0.1);
    for (double h : {1e-4, 1e-2, 0.5, 3.0})
      CHECK(gradient_gap(fd_gradient(theta, p, 0.1, h), exact) <= 1e-9 * exact.norm());
  }
  CHECK_THROWS_AS(fd_gradient(NetworkParams::zeros(kArch3), p, 0.1, 0.0), UsageError);
}

TEST_CASE("jacobi eigen solver") {
  SUBCASE("diagonal") {
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 1.0;
    d(1, 1) = 3.0;
    const JacobiResult r = jacobi_eigs(d);
    CHECK(r.values(0) == 3.0);
    CHECK(r.values(1) == 1.0);
  }
  SUBCASE("swap matrix") {
    Matrix s(2, 2);
    s << 0, 1, 1, 0;
    const JacobiResult r = jacobi_eigs(s);
    CHECK(r.values(0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(r.values(1) == doctest::Approx(-1.0).epsilon(1e-15));
  }
  SUBCASE("round trip and orthonormal frame") {
    std::mt19937_64 rng(71);
    for (int trial = 0; trial < 50; ++trial) {
      const int n = 1 + trial % 12;
      const Matrix s = random_symmetric(n, rng);
      const JacobiResult r = jacobi_eigs(s);
      CHECK((s - r.vectors * r.values.asDiagonal() * r.vectors.transpose()).norm() <= 1e-10);
      CHECK((r.vectors.transpose() * r.vectors - Matrix::Identity(n, n)).norm() <= 1e-12);
      for (int i = 1; i < n; ++i) CHECK(r.values(i - 1) >= r.values(i));
    }
  }
  SUBCASE("agrees with the main spectral path") {
    std::mt19937_64 rng(72);
    for (int trial = 0; trial < 1000; ++trial) {
      const int n = 1 + trial % 16;
      const Matrix s = random_symmetric(n, rng);
      const Vector main = symmetric_eigenvalues(s);
      const Vector oracle = jacobi_eigs(s).values;
      CHECK((main - oracle).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
  SUBCASE("singular values via the gram matrix") {
    std::mt19937_64 rng(73);
    for (int trial = 0; trial < 20; ++trial) {
      const Matrix m = random_matrix(4, 3, rng);
      const Vector sv = jacobi_eigs(m.transpose() * m).values.cwiseMax(0.0).cwiseSqrt();
      CHECK((sv - singular_values(m)).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
  SUBCASE("iteration cap") {
    std::mt19937_64 rng(74);
    CHECK_THROWS_AS(jacobi_eigs(random_symmetric(8, rng), 1e-13, 1), NumericalError);
  }
}

TEST_CASE("absorbing set sampler") {
  const ArchSpec arch = ArchSpec::uniform(3, 2, 3, 2);
  const AbsorbingSpec spec{1, 0.01, 0.4, 0.05, 4.0, 3};
  Rng a(5), b(5);
  const NetworkParams first = sample_member(spec, arch, a);
  const NetworkParams second = sample_member(spec, arch, b);
  for (int k = 0; k < 3; ++k) CHECK(first.weights[k] == second.weights[k]);

  Rng rng(6);
  double max_norm = 0.0;
  for (int i = 0; i < 100; ++i) {
    const NetworkParams p = sample_member(spec, arch, rng);
    CHECK(membership(p, spec).member);
    for (const auto& w : p.weights) max_norm = std::max(max_norm, w.squaredNorm());
  }
  // Draws spread over the cap rather than sitting at the origin.
  CHECK(max_norm > 0.5);
}

TEST_CASE("closure monte carlo") {
  const CompletionProblem p = CompletionProblem::two_by_two(0.25);
  const BoundReport b = admissible_bounds(1.0, 3, kArch3, p, 1, 1e-300, 0.49, 1.0);
  const AbsorbingSpec spec{1, b.eps1_max, 0.49, b.alpha_max, 1.0, 2};
  BoundOptions at_alpha;
  at_alpha.alpha = spec.alpha;
  const double eta_max = admissible_bounds(1.0, 3, kArch3, p, 1, spec.eps1, 0.49, 1.0, at_alpha).eta_max;

  SUBCASE("no trials") {
    const ClosureReport r = closure_monte_carlo(spec, 1.0, kArch3, p, 0, 100, 1);
    CHECK(r.trials == 0);
    CHECK(r.step_checks == 0);
    CHECK(r.violations.empty());
  }
  SUBCASE("admissible step size keeps every state inside") {
    const ClosureReport r = closure_monte_carlo(spec, 1.0, kArch3, p, 8, 500, 2);
    CHECK(r.step_checks == 4000);
    CHECK(r.violations.empty());
    CHECK(r.eta == eta_max);
    CHECK(r.eta > 1e-9);
  }
  SUBCASE("asserting mode rejects inadmissible settings") {
    ClosureOptions o;
    o.eta = 2.0 * eta_max;
    CHECK_THROWS_AS(closure_monte_carlo(spec, 1.0, kArch3, p, 1, 10, 3, o), UsageError);
    AbsorbingSpec loose = spec;
    loose.eps1 = 1.0;
    CHECK_THROWS_AS(closure_monte_carlo(loose, 1.0, kArch3, p, 1, 10, 3), UsageError);
  }
  SUBCASE("falsifier mode reports violations") {
    // Near the soft-rank boundary with a large step, samples leave the set.
    ClosureOptions o;
    o.asserting = false;
    o.eta = 0.5;
    o.sampler.tail_fill = 0.99;
    o.sampler.cap_fill = 0.99;
    const AbsorbingSpec tight{1, 1e-3, 0.05, 0.05, 1.0, 2};
    const ClosureReport r = closure_monte_carlo(tight, 0.01, kArch3, p, 10, 200, 4, o);
    CHECK(!r.asserting);
    CHECK(r.step_checks > 0);
    REQUIRE(!r.violations.empty());
    for (const auto& v : r.violations) {
      CHECK(!v.verdict.member);
      CHECK(!v.verdict.violated.empty());
      CHECK(v.step >= 1);
      CHECK(v.params.depth() == 3);
    }
  }
}

TEST_CASE("forced column reachability") {
  const CompletionProblem p = CompletionProblem::two_by_two(0.25);
  const double lambda = 1.0, cap = 1.0, eps1 = 0.01, alpha = 0.25, eps2 = 0.4;
  BoundOptions o;
  o.alpha = alpha;
  const BoundReport b = admissible_bounds(lambda, 3, kArch3, p, 1, eps1, eps2, cap, o);
  CHECK(eps1 <= b.eps1_travel_max);
  const AbsorbingSpec spec{1, eps1, eps2, alpha, cap, 2};

  SUBCASE("trailing singular values follow the envelope") {
    Rng rng(5);
    SamplerOptions so;
    so.tail_fill = 0.0;
    for (int t = 0; t < 4; ++t) {
      const NetworkParams start = sample_member(AbsorbingSpec{2, eps1, 0.49, alpha, cap, 2}, kArch3, rng, so);
      const ReachabilityReport r = forced_column_reachability(
          start, spec, p, b.eta_travel_max, lambda, static_cast<long>(std::ceil(b.t1_min)), t);
      CHECK(!r.transpose);
      REQUIRE(r.forced.size() == 1);
      CHECK(r.forced[0] == 0);
      CHECK(r.envelope_checks > 0);
      CHECK(r.envelope_violations == 0);
      CHECK(r.worst_ratio <= 1.0);
      CHECK(r.final_membership.member);
      CHECK(r.trailing_w1.back() <= std::sqrt(alpha * eps2 / 2.0));
    }
  }
  SUBCASE("full rank target is vacuous") {
    Rng rng(6);
    AbsorbingSpec full = spec;
    full.r = 2;
    const NetworkParams start = sample_member(full, kArch3, rng);
    const ReachabilityReport r = forced_column_reachability(start, full, p, 1e-3, lambda, 50, 1);
    CHECK(r.envelope_checks == 0);
    CHECK(r.final_trailing.empty() == false);
    for (double v : r.final_trailing) CHECK(v == 0.0);
    CHECK(r.final_membership.member);
  }
  SUBCASE("wide targets force rows") {
    Matrix t(2, 3);
    t << 1, 2, 3, 4, 5, 6;
    const CompletionProblem wide(t, {{0, 0}, {0, 1}, {0, 2}, {1, 1}});
    const ArchSpec arch = ArchSpec::uniform(3, 3, 2, 2);
    const NetworkParams start = NetworkParams::zeros(arch);
    const ReachabilityReport r =
        forced_column_reachability(start, AbsorbingSpec{1, eps1, eps2, alpha, 10.0, 3}, wide, 1e-3, 0.1, 10, 2);
    CHECK(r.transpose);
    CHECK(r.forced[0] == 0);
    const ArchSpec tall = ArchSpec::uniform(3, 2, 2, 3);
    const CompletionProblem tp(t.transpose(), {{0, 0}, {1, 0}, {2, 0}, {1, 1}});
    const ReachabilityReport rt = forced_column_reachability(
        NetworkParams::zeros(tall), AbsorbingSpec{1, eps1, eps2, alpha, 10.0, 3}, tp, 1e-3, 0.1, 10, 2);
    CHECK(!rt.transpose);
    CHECK(rt.forced[0] == 0);
  }
  CHECK_THROWS_AS(forced_column_reachability(NetworkParams::zeros(kArch3), spec, p, 0.0, 1.0, 10, 1),
                  UsageError);
}

TEST_CASE("penalized norm search") {
  Matrix a(2, 2);
  a << 1, 4, 0.25, 1;
  const NormSearchResult r =
      penalized_norm_search(a, kArch3, 3, {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6}, 20000);
  CHECK(r.fitted);
  CHECK(r.residual <= 1e-4);
  CHECK(r.norm_sq == doctest::Approx(7.8713134672322544).epsilon(1e-4));
  CHECK(r.norm_sq == doctest::Approx(param_norm_sq(r.params)));
  CHECK_THROWS_AS(penalized_norm_search(a, kArch3, 3, {}, 10), UsageError);
  CHECK_THROWS_AS(penalized_norm_search(a, kArch3, 3, {0.0}, 10), UsageError);
}
