#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mispca/correlation.hpp"
#include "mispca/extraction.hpp"
#include "mispca/indicators.hpp"
#include "mispca/random.hpp"
#include "mispca/retention.hpp"

namespace mispca {

inline constexpr double kWithinBlockCorrelation = 0.7;
inline constexpr double kBetweenBlockCorrelation = 0.3;
inline constexpr double kSuccessThreshold = 0.95;

struct SimCondition {
  std::size_t n_components = 1;
  std::size_t items_per_component = 5;
  std::size_t n = 1000;
  double p_miss = 0.25;
  CorrelationKind corr_kind = CorrelationKind::pearson;
  ExtractionMethod method = ExtractionMethod::pca;

  std::size_t variables() const noexcept { return n_components * items_per_component; }
  std::string label() const;
  void validate() const;
};

/// Between-subjects factorial (4 x 3 x 3 x 3 = 108 cells) for one
/// correlation/method pair, ordered components, items, n, p_miss.
std::vector<SimCondition> factorial_grid(CorrelationKind kind = CorrelationKind::pearson,
                                         ExtractionMethod method = ExtractionMethod::pca);

/// Population correlation: 1 on the diagonal, 0.7 within a component's
/// items, 0.3 across components.
Eigen::MatrixXd block_correlation(const SimCondition& cond);

/// Lower Cholesky factor of block_correlation; throws if the block matrix
/// is not positive definite.
Eigen::MatrixXd block_factor(const SimCondition& cond);

/// n rows of latent multivariate normal data.
Eigen::MatrixXd generate_latent(const SimCondition& cond, const Eigen::MatrixXd& factor, Engine& engine);

/// Indicators: 1 iff the latent value exceeds the (1 - p_miss) normal quantile.
IndicatorMatrix dichotomize(const SimCondition& cond, const Eigen::MatrixXd& latent);

IndicatorMatrix generate(const SimCondition& cond, std::uint64_t seed);

struct SimOptions {
  std::size_t pa_reps = 100;
  double percentile = 0.95;
  unsigned threads = 1;
};

struct CriterionTally {
  std::size_t converged = 0;
  std::size_t correct = 0;
  double proportion() const noexcept {
    return converged == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(converged);
  }
  bool success() const noexcept { return converged > 0 && proportion() >= kSuccessThreshold; }
};

struct ReplicationOutcome {
  bool converged = false;  // data, correlation and extraction all succeeded
  std::string failure;     // reason when not converged
  std::array<std::optional<std::size_t>, 4> retained;  // per criterion, empty when that criterion failed
};

struct ConditionResult {
  SimCondition condition;
  std::size_t replications_run = 0;
  std::size_t replications_failed = 0;
  std::array<CriterionTally, 4> tallies;  // kAllCriteria order
};

/// One replication keyed by (seed, condition, rep).
ReplicationOutcome replicate(const SimCondition& cond, const Eigen::MatrixXd& factor, std::uint64_t seed,
                             std::size_t rep, const SimOptions& options);

ConditionResult run_condition(const SimCondition& cond, std::size_t reps, std::uint64_t seed,
                              const SimOptions& options = {});

struct SimReport {
  std::size_t reps = 0;
  std::uint64_t seed = 0;
  std::vector<ConditionResult> cells;
  std::array<double, 4> aggregate{};          // mean per-cell proportion
  std::array<std::size_t, 4> cells_success{};
  std::array<std::size_t, 4> cells_scored{};  // cells with at least one converged replication
};

SimReport run_grid(const std::vector<SimCondition>& conditions, std::size_t reps, std::uint64_t seed,
                   const SimOptions& options = {});

}  // namespace mispca
