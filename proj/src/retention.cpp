#include "mispca/retention.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "mispca/correlation.hpp"
#include "mispca/error.hpp"
#include "mispca/parallel.hpp"
#include "mispca/random.hpp"

namespace mispca {

const char* to_string(Criterion criterion) {
  switch (criterion) {
    case Criterion::kaiser: return "kaiser";
    case Criterion::ekc: return "ekc";
    case Criterion::parallel: return "parallel";
    case Criterion::profile_likelihood: return "profile_likelihood";
  }
  return "?";
}

Criterion parse_criterion(const std::string& text) {
  for (Criterion c : kAllCriteria) {
    if (text == to_string(c)) return c;
  }
  if (text == "pa") return Criterion::parallel;
  if (text == "pl") return Criterion::profile_likelihood;
  throw Error(ErrorCode::invalid_argument, "unknown criterion '" + text + "'");
}

namespace {

void require_nonempty(std::span<const double> eigenvalues) {
  if (eigenvalues.empty()) throw Error(ErrorCode::invalid_argument, "empty eigenvalue list");
}

// Count of leading positions where observed exceeds reference.
std::size_t leading_exceedances(std::span<const double> observed, std::span<const double> reference) {
  std::size_t m = 0;
  while (m < observed.size() && observed[m] > reference[m]) ++m;
  return m;
}

}  // namespace

RetentionDecision kaiser(std::span<const double> eigenvalues) {
  require_nonempty(eigenvalues);
  RetentionDecision d;
  d.criterion = Criterion::kaiser;
  d.k_retained = static_cast<std::size_t>(
      std::count_if(eigenvalues.begin(), eigenvalues.end(), [](double v) { return v > 1.0; }));
  d.diagnostics.assign(eigenvalues.size(), 1.0);
  return d;
}

RetentionDecision ekc(std::span<const double> eigenvalues, std::size_t n) {
  require_nonempty(eigenvalues);
  if (n < 2) throw Error(ErrorCode::invalid_argument, "EKC needs a sample size of at least 2");
  const double k = static_cast<double>(eigenvalues.size());
  const double inflation = std::pow(1.0 + std::sqrt(k / static_cast<double>(n)), 2);
  RetentionDecision d;
  d.criterion = Criterion::ekc;
  d.diagnostics.resize(eigenvalues.size());
  double preceding = 0.0;
  for (std::size_t j = 0; j < eigenvalues.size(); ++j) {
    const double remaining = (k - preceding) / (k - static_cast<double>(j));
    d.diagnostics[j] = std::max(inflation * remaining, 1.0);
    preceding += eigenvalues[j];
  }
  d.k_retained = leading_exceedances(eigenvalues, d.diagnostics);
  return d;
}

Spectrum spectrum_for(ExtractionMethod method) {
  return method == ExtractionMethod::pca ? Spectrum::pca : Spectrum::reduced;
}

Eigen::VectorXd criterion_spectrum(const Eigen::MatrixXd& correlation, Spectrum spectrum) {
  return spectrum == Spectrum::pca ? eigenvalues_descending(correlation) : reduced_eigenvalues(correlation);
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw Error(ErrorCode::invalid_argument, "quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = static_cast<double>(values.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

RetentionDecision parallel_analysis(const IndicatorMatrix& ind, std::span<const double> eigenvalues,
                                    const ParallelOptions& options) {
  require_nonempty(eigenvalues);
  if (options.reps < 1) throw Error(ErrorCode::invalid_argument, "parallel analysis needs at least one replication");
  if (!(options.percentile > 0.0 && options.percentile < 1.0)) {
    throw Error(ErrorCode::invalid_argument, "percentile must lie in (0, 1)");
  }
  const std::size_t k = ind.cols();
  if (eigenvalues.size() != k) {
    throw Error(ErrorCode::dimension_mismatch, "observed spectrum length does not match the indicator count");
  }
  const auto n = static_cast<Eigen::Index>(ind.rows());

  std::vector<Eigen::VectorXd> spectra(options.reps);
  std::vector<char> ok(options.reps, 0);
  parallel_for(options.reps, options.threads, [&](std::size_t rep) {
    Engine engine = make_engine({options.seed, rep, 0x5041u});
    BinaryMatrix permuted = ind.values();
    std::vector<std::uint8_t> column(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < permuted.cols(); ++j) {
      for (Eigen::Index i = 0; i < n; ++i) column[static_cast<std::size_t>(i)] = permuted(i, j);
      std::shuffle(column.begin(), column.end(), engine);
      for (Eigen::Index i = 0; i < n; ++i) permuted(i, j) = column[static_cast<std::size_t>(i)];
    }
    try {
      const auto r = pearson(permuted);
      Eigen::VectorXd s = criterion_spectrum(r.values, options.spectrum);
      if (s.allFinite()) {
        spectra[rep] = std::move(s);
        ok[rep] = 1;
      }
    } catch (const Error&) {
      // counted as dropped below
    }
  });

  RetentionDecision d;
  d.criterion = Criterion::parallel;
  d.replications = options.reps;
  d.dropped_replications = static_cast<std::size_t>(std::count(ok.begin(), ok.end(), 0));
  d.converged = static_cast<double>(d.dropped_replications) <= 0.10 * static_cast<double>(options.reps);
  if (d.dropped_replications == options.reps) {
    d.diagnostics.assign(k, std::numeric_limits<double>::quiet_NaN());
    d.converged = false;
    return d;
  }
  d.diagnostics.resize(k);
  std::vector<double> position;
  position.reserve(options.reps);
  for (std::size_t j = 0; j < k; ++j) {
    position.clear();
    for (std::size_t rep = 0; rep < options.reps; ++rep) {
      if (ok[rep]) position.push_back(spectra[rep](static_cast<Eigen::Index>(j)));
    }
    d.diagnostics[j] = quantile(position, options.percentile);
  }
  d.k_retained = leading_exceedances(eigenvalues, d.diagnostics);
  return d;
}

RetentionDecision profile_likelihood(std::span<const double> eigenvalues) {
  if (eigenvalues.size() < 2) throw Error(ErrorCode::invalid_argument, "profile likelihood needs at least two eigenvalues");
  const std::size_t k = eigenvalues.size();
  const double kd = static_cast<double>(k);
  RetentionDecision d;
  d.criterion = Criterion::profile_likelihood;
  d.diagnostics.resize(k - 1);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t q = 1; q < k; ++q) {
    double head = 0.0, tail = 0.0;
    for (std::size_t i = 0; i < q; ++i) head += eigenvalues[i];
    for (std::size_t i = q; i < k; ++i) tail += eigenvalues[i];
    head /= static_cast<double>(q);
    tail /= static_cast<double>(k - q);
    double ss = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double mu = i < q ? head : tail;
      ss += (eigenvalues[i] - mu) * (eigenvalues[i] - mu);
    }
    const double variance = std::max(ss / kd, 1e-12);
    const double ll = -0.5 * kd * std::log(2.0 * std::numbers::pi * variance) - ss / (2.0 * variance);
    d.diagnostics[q - 1] = ll;
    if (ll > best) {
      best = ll;
      d.k_retained = q;
    }
  }
  return d;
}

Criterion guidance(std::size_t n, std::size_t items_per_component, std::size_t expected_components) {
  if (n == 0 || items_per_component == 0 || expected_components == 0) {
    throw Error(ErrorCode::invalid_argument, "guidance inputs must be positive");
  }
  if (items_per_component >= 5 && n < 1000 && expected_components >= 3) {
    return n >= 250 ? Criterion::ekc : Criterion::kaiser;
  }
  return Criterion::parallel;
}

std::array<RetentionDecision, 4> evaluate_criteria(const IndicatorMatrix& ind, std::span<const double> eigenvalues,
                                                   const ParallelOptions& options) {
  std::array<RetentionDecision, 4> out;
  out[0] = kaiser(eigenvalues);
  out[1] = ekc(eigenvalues, ind.rows());
  out[2] = parallel_analysis(ind, eigenvalues, options);
  if (eigenvalues.size() >= 2) {
    out[3] = profile_likelihood(eigenvalues);
  } else {
    out[3].criterion = Criterion::profile_likelihood;
    out[3].converged = false;
  }
  return out;
}

}  // namespace mispca
