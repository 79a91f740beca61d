#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mispca/error.hpp"
#include "mispca/retention.hpp"
#include "support.hpp"

using namespace mispca;

namespace {

std::vector<double> sorted_desc(std::vector<double> v) {
  std::sort(v.rbegin(), v.rend());
  return v;
}

// Two-group normal log-likelihood evaluated directly from its definition.
std::size_t brute_force_pl(const std::vector<double>& ev) {
  const std::size_t k = ev.size();
  std::size_t best_q = 0;
  double best = -INFINITY;
  for (std::size_t q = 1; q < k; ++q) {
    double m1 = 0, m2 = 0;
    for (std::size_t i = 0; i < k; ++i) (i < q ? m1 : m2) += ev[i];
    m1 /= static_cast<double>(q);
    m2 /= static_cast<double>(k - q);
    double ss = 0;
    for (std::size_t i = 0; i < k; ++i) ss += std::pow(ev[i] - (i < q ? m1 : m2), 2);
    const double var = std::max(ss / static_cast<double>(k), 1e-12);
    double ll = 0;
    for (std::size_t i = 0; i < k; ++i) {
      const double mu = i < q ? m1 : m2;
      ll += -0.5 * std::log(2 * std::numbers::pi * var) - std::pow(ev[i] - mu, 2) / (2 * var);
    }
    if (best_q == 0 || ll > best + 1e-9 * std::abs(best)) {
      best = ll;
      best_q = q;
    }
  }
  return best_q;
}

IndicatorMatrix noise(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.3);
  BinaryMatrix v(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  for (Eigen::Index i = 0; i < v.rows(); ++i)
    for (Eigen::Index j = 0; j < v.cols(); ++j) v(i, j) = coin(rng);
  return IndicatorMatrix::from_binary(v, testing_support::names(k));
}

std::vector<double> spectrum(const IndicatorMatrix& ind) {
  const Eigen::VectorXd ev = eigenvalues_descending(pearson(ind).values);
  return {ev.data(), ev.data() + ev.size()};
}

}  // namespace

TEST_CASE("kaiser") {
  CHECK(kaiser(std::vector<double>{2.5, 1.2, 0.8, 0.5}).k_retained == 2);
  CHECK(kaiser(std::vector<double>{1.0, 1.0, 1.0}).k_retained == 0);
  CHECK(kaiser(std::vector<double>{2.4, 0.3, 0.3}).k_retained == 1);
  CHECK_THROWS_AS(kaiser(std::vector<double>{}), Error);
}

TEST_CASE("ekc") {
  const auto big = ekc(std::vector<double>{2.5, 1.2, 0.8}, 1000000000);
  CHECK(big.k_retained == 2);
  const auto flat = ekc(std::vector<double>(5, 1.0), 100);
  CHECK(flat.diagnostics[0] == doctest::Approx(std::pow(1 + std::sqrt(0.05), 2)).epsilon(1e-14));
  CHECK(flat.diagnostics[0] == doctest::Approx(1.498).epsilon(1e-3));
  CHECK(flat.k_retained == 0);
  for (double r : flat.diagnostics) CHECK(r >= 1.0);
  CHECK_THROWS_AS(ekc(std::vector<double>{1.0}, 1), Error);
}

TEST_CASE("profile likelihood") {
  CHECK(profile_likelihood(std::vector<double>{10, 1, 1, 1, 1}).k_retained == 1);
  const auto flat = profile_likelihood(std::vector<double>(6, 1.0));
  CHECK(flat.k_retained == 1);
  CHECK(flat.diagnostics.size() == 5);
  CHECK_THROWS_AS(profile_likelihood(std::vector<double>{3.0}), Error);
}

TEST_CASE("profile likelihood equals brute force on random spectra") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> size(2, 30);
  std::exponential_distribution<double> draw(1.0);
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> ev(static_cast<std::size_t>(size(rng)));
    for (auto& x : ev) x = draw(rng);
    ev = sorted_desc(ev);
    CHECK(profile_likelihood(ev).k_retained == brute_force_pl(ev));
  }
}

TEST_CASE("retention properties") {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<int> size(2, 20);
  std::gamma_distribution<double> draw(1.5, 1.0);
  for (int t = 0; t < 300; ++t) {
    std::vector<double> ev(static_cast<std::size_t>(size(rng)));
    for (auto& x : ev) x = draw(rng);
    ev = sorted_desc(ev);
    const auto kd = kaiser(ev);
    CHECK(ekc(ev, 50 + static_cast<std::size_t>(t)).k_retained <= kd.k_retained);

    auto extended = ev;
    extended.push_back(std::min(ev.back(), 1.0) * 0.5);
    CHECK(kaiser(extended).k_retained == kd.k_retained);

    std::vector<double> scaled = ev;
    for (auto& x : scaled) x *= 3.7;
    CHECK(profile_likelihood(scaled).k_retained == profile_likelihood(ev).k_retained);
  }
}

TEST_CASE("guidance") {
  CHECK(guidance(1000, 10, 10) == Criterion::parallel);
  CHECK(guidance(250, 5, 3) == Criterion::ekc);
  CHECK(guidance(100, 5, 3) == Criterion::kaiser);
  CHECK(guidance(999, 3, 10) == Criterion::parallel);
  CHECK(guidance(500, 5, 2) == Criterion::parallel);
  for (std::size_t n : {1, 100, 249, 250, 999, 1000, 5000})
    for (std::size_t i : {1, 4, 5, 10})
      for (std::size_t c : {1, 2, 3, 10}) CHECK_NOTHROW(guidance(n, i, c));
  CHECK_THROWS_AS(guidance(0, 5, 3), Error);
}

TEST_CASE("names round trip") {
  for (Criterion c : kAllCriteria) CHECK(parse_criterion(to_string(c)) == c);
  CHECK(parse_criterion("pa") == Criterion::parallel);
  CHECK_THROWS_AS(parse_criterion("scree"), Error);
}

TEST_CASE("quantile type 7") {
  CHECK(quantile({1, 2, 3, 4, 5}, 0.5) == 3.0);
  CHECK(quantile({4, 1, 3, 2}, 0.95) == doctest::Approx(3.85));
  CHECK(quantile({7}, 0.95) == 7.0);
}

TEST_CASE("parallel analysis under the null retains nothing") {
  std::size_t zero = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto ind = noise(1000, 8, seed);
    ParallelOptions o;
    o.reps = 50;
    o.seed = seed;
    zero += parallel_analysis(ind, spectrum(ind), o).k_retained == 0;
  }
  CHECK(zero >= 18);
}

TEST_CASE("parallel analysis determinism") {
  const auto ind = noise(300, 6, 99);
  const auto ev = spectrum(ind);
  ParallelOptions o;
  o.reps = 40;
  o.seed = 5;
  const auto a = parallel_analysis(ind, ev, o);
  o.threads = 4;
  const auto b = parallel_analysis(ind, ev, o);
  CHECK(a.diagnostics == b.diagnostics);
  CHECK(a.k_retained == b.k_retained);

  // With one replication the reference is that replication's spectrum.
  ParallelOptions one;
  one.reps = 1;
  one.seed = 5;
  one.percentile = 0.3;
  const auto c = parallel_analysis(ind, ev, one);
  one.percentile = 0.9;
  CHECK(parallel_analysis(ind, ev, one).diagnostics == c.diagnostics);
  CHECK(c.diagnostics.size() == 6);

  CHECK_THROWS_AS(parallel_analysis(ind, std::vector<double>(3, 1.0), o), Error);
}

TEST_CASE("parallel analysis drops degenerate replications") {
  // At n = 2 no permutation can make a column constant, so nothing drops;
  // the point here is that tiny inputs do not throw.
  BinaryMatrix v(2, 2);
  v << 0, 1, 1, 0;
  const auto ind = IndicatorMatrix::from_binary(v, {"a", "b"});
  ParallelOptions o;
  o.reps = 10;
  const auto d = parallel_analysis(ind, std::vector<double>{2.0, 0.0}, o);
  CHECK(d.replications == 10);
  CHECK(d.converged);
}
