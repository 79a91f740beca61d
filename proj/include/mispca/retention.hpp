#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mispca/extraction.hpp"
#include "mispca/indicators.hpp"

namespace mispca {

enum class Criterion { kaiser, ekc, parallel, profile_likelihood };
inline constexpr std::array<Criterion, 4> kAllCriteria{Criterion::kaiser, Criterion::ekc, Criterion::parallel,
                                                       Criterion::profile_likelihood};
const char* to_string(Criterion criterion);
Criterion parse_criterion(const std::string& text);

struct RetentionDecision {
  Criterion criterion = Criterion::kaiser;
  std::size_t k_retained = 0;
  // kaiser: the constant 1; ekc: reference eigenvalues; parallel: percentile
  // curve; profile_likelihood: log-likelihood for q = 1..k-1.
  std::vector<double> diagnostics;
  bool converged = true;
  std::size_t replications = 0;          // parallel only
  std::size_t dropped_replications = 0;  // parallel only
};

RetentionDecision kaiser(std::span<const double> eigenvalues);

/// Empirical Kaiser criterion with the serial reference
/// max((1 + sqrt(k/n))^2 * (k - sum_{i<j} lambda_i) / (k - j + 1), 1).
RetentionDecision ekc(std::span<const double> eigenvalues, std::size_t n);

/// Which spectrum parallel analysis compares against.
enum class Spectrum { pca, reduced };
Spectrum spectrum_for(ExtractionMethod method);

/// Eigenvalues the criteria are evaluated on: the correlation spectrum for
/// PCA, the SMC-reduced spectrum for PAF.
Eigen::VectorXd criterion_spectrum(const Eigen::MatrixXd& correlation, Spectrum spectrum);

struct ParallelOptions {
  std::size_t reps = 100;
  double percentile = 0.95;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  Spectrum spectrum = Spectrum::pca;
};

/// Column-permutation parallel analysis on Pearson correlations. Each
/// replication draws from its own stream keyed by (seed, replication), so
/// the result does not depend on the thread count.
RetentionDecision parallel_analysis(const IndicatorMatrix& ind, std::span<const double> eigenvalues,
                                    const ParallelOptions& options = {});

/// Two-group normal profile likelihood over split points q = 1..k-1.
RetentionDecision profile_likelihood(std::span<const double> eigenvalues);

/// Static criterion-selection rule from the simulation study.
Criterion guidance(std::size_t n, std::size_t items_per_component, std::size_t expected_components);

/// Type-7 (linear interpolation) sample quantile of unsorted data.
double quantile(std::vector<double> values, double p);

/// All four criteria in kAllCriteria order.
std::array<RetentionDecision, 4> evaluate_criteria(const IndicatorMatrix& ind, std::span<const double> eigenvalues,
                                                   const ParallelOptions& options);

}  // namespace mispca
