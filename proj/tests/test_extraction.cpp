#include <doctest.h>

#include <cmath>
#include <random>

#include "mispca/error.hpp"
#include "mispca/extraction.hpp"
#include "mispca/simulation.hpp"
#include "support.hpp"

using namespace mispca;
using testing_support::equicorrelation;

namespace {

CorrelationMatrix wrap(Eigen::MatrixXd r) {
  CorrelationMatrix c;
  c.values = std::move(r);
  return c;
}

IndicatorMatrix random_indicators(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.3);
  BinaryMatrix v(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    const bool base = coin(rng);
    for (Eigen::Index j = 0; j < v.cols(); ++j) v(i, j) = base ? coin(rng) || coin(rng) : coin(rng) && coin(rng);
  }
  return IndicatorMatrix::from_binary(v, testing_support::names(k));
}

}  // namespace

TEST_CASE("pca eigenstructure") {
  const double r = 0.35;
  Eigen::MatrixXd two(2, 2);
  two << 1, r, r, 1;
  const auto s2 = pca(wrap(two));
  CHECK(s2.eigenvalues(0) == doctest::Approx(1 + r).epsilon(1e-14));
  CHECK(s2.eigenvalues(1) == doctest::Approx(1 - r).epsilon(1e-14));
  CHECK(s2.converged);

  const auto id = pca(wrap(Eigen::MatrixXd::Identity(6, 6)));
  for (int i = 0; i < 6; ++i) CHECK(id.eigenvalues(i) == doctest::Approx(1.0).epsilon(1e-14));

  const auto eq = pca(wrap(equicorrelation(3, 0.7)));
  CHECK(eq.eigenvalues(0) == doctest::Approx(2.4).epsilon(1e-12));
  CHECK(eq.eigenvalues(1) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(eq.eigenvalues(2) == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("pca loadings are eigenvectors scaled by root eigenvalues") {
  const auto ind = random_indicators(500, 6, 1);
  const auto sol = pca(pearson(ind));
  CHECK(sol.eigenvalues.sum() == doctest::Approx(6.0).epsilon(1e-10));
  for (Eigen::Index j = 0; j + 1 < sol.eigenvalues.size(); ++j) CHECK(sol.eigenvalues(j) >= sol.eigenvalues(j + 1));
  for (Eigen::Index j = 0; j < 6; ++j) {
    CHECK(sol.eigenvectors.col(j).norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((sol.loadings.col(j) - sol.eigenvectors.col(j) * std::sqrt(sol.eigenvalues(j))).norm() < 1e-12);
  }
}

TEST_CASE("paf") {
  const auto none = paf(wrap(Eigen::MatrixXd::Identity(4, 4)), 1);
  CHECK(none.converged);
  CHECK(none.loadings.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(none.communalities.cwiseAbs().maxCoeff() < 1e-12);

  // One common factor with loading 0.7 reproduces r = 0.49 exactly.
  const auto one = paf(wrap(equicorrelation(3, 0.49)), 1);
  CHECK(one.converged);
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(one.loadings(i, 0)) == doctest::Approx(0.7).epsilon(1e-4));
    CHECK(one.communalities(i) == doctest::Approx(0.49).epsilon(1e-4));
  }

  CHECK_THROWS_AS(paf(wrap(equicorrelation(3, 0.5)), 3), Error);
  CHECK_THROWS_AS(paf(wrap(equicorrelation(3, 0.5)), 0), Error);

  PafOptions brief;
  brief.max_iterations = 2;
  const auto cut = paf(pearson(random_indicators(30, 4, 2)), 2, brief);
  CHECK_FALSE(cut.converged);
  CHECK(cut.iterations == 2);
}

TEST_CASE("paf fixed point") {
  const SimCondition cond{2, 3, 2000, 0.5, CorrelationKind::pearson, ExtractionMethod::paf};
  const auto sol = paf(pearson(generate(cond, 3)), 2);
  REQUIRE(sol.converged);
  const Eigen::VectorXd recomputed = sol.loadings.rowwise().squaredNorm().cwiseMin(1.0);
  CHECK((recomputed - sol.communalities).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("smc fallback on a singular matrix") {
  Eigen::MatrixXd r = Eigen::MatrixXd::Ones(3, 3);
  bool fallback = false;
  const auto smc = squared_multiple_correlations(r, fallback);
  CHECK(fallback);
  CHECK(smc.isApprox(Eigen::VectorXd::Ones(3)));
}

TEST_CASE("scores: orientation, cutoff and uncorrelated columns") {
  const auto ind = random_indicators(600, 5, 4);
  const auto sol = pca(pearson(ind));
  const auto s = scores(ind, sol, 3);
  for (Eigen::Index j = 0; j < 3; ++j) CHECK(s.loadings.col(j).sum() >= 0.0);
  for (Eigen::Index i = 0; i < s.scores.rows(); ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) CHECK(s.dichotomized(i, j) == (s.scores(i, j) > 0.0 ? 1 : 0));
  }
  const Eigen::MatrixXd centered = s.scores.rowwise() - s.scores.colwise().mean();
  const Eigen::MatrixXd cov = centered.transpose() * centered;
  for (Eigen::Index a = 0; a < 3; ++a) {
    for (Eigen::Index b = a + 1; b < 3; ++b) CHECK(std::abs(cov(a, b) / std::sqrt(cov(a, a) * cov(b, b))) < 1e-8);
  }

  EigenSolution negated = sol;
  negated.eigenvectors *= -1.0;
  negated.loadings *= -1.0;
  const auto t = scores(ind, negated, 3);
  CHECK(t.dichotomized == s.dichotomized);
  CHECK((t.scores - s.scores).cwiseAbs().maxCoeff() < 1e-12);
  for (std::size_t j = 0; j < 3; ++j) CHECK(t.flipped[j] != s.flipped[j]);

  CHECK_THROWS_AS(scores(ind, sol, 6), Error);
  CHECK_THROWS_AS(scores(ind, sol, 0), Error);
}

TEST_CASE("scores on a single indicator reproduce the indicator") {
  BinaryMatrix v(6, 1);
  v << 0, 1, 1, 0, 0, 1;
  const auto ind = IndicatorMatrix::from_binary(v, {"a"});
  CorrelationMatrix c;
  c.values = Eigen::MatrixXd::Ones(1, 1);
  const auto s = scores(ind, pca(c), 1);
  CHECK(s.dichotomized == v);
  CHECK(s.scores(1, 0) > 0);
}

TEST_CASE("a score of exactly zero stays at zero after dichotomizing") {
  // Row (1, 0) and row (0, 1) have opposite standardized values; weights equal.
  BinaryMatrix v(4, 2);
  v << 1, 0, 0, 1, 1, 1, 0, 0;
  const auto ind = IndicatorMatrix::from_binary(v, {"a", "b"});
  EigenSolution sol;
  sol.eigenvectors = Eigen::MatrixXd::Constant(2, 1, std::sqrt(0.5));
  sol.loadings = sol.eigenvectors;
  const auto s = scores(ind, sol, 1);
  CHECK(s.scores(0, 0) == doctest::Approx(0.0));
  CHECK(s.dichotomized(0, 0) == 0);
  CHECK(s.dichotomized(1, 0) == 0);
  CHECK(s.dichotomized(2, 0) == 1);
  CHECK(s.fully_missing[2]);
}

TEST_CASE("eigenvalue gap on generated data") {
  std::size_t separated = 0;
  const std::size_t reps = 20;
  for (std::size_t rep = 0; rep < reps; ++rep) {
    const SimCondition cond{3, 5, 1000, 0.25, CorrelationKind::pearson, ExtractionMethod::pca};
    const auto ev = pca(pearson(generate(cond, 40 + rep))).eigenvalues;
    separated += ev(2) > ev(3);
  }
  CHECK(separated >= 19);
}
