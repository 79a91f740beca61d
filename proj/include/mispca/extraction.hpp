#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mispca/correlation.hpp"
#include "mispca/indicators.hpp"

namespace mispca {

enum class ExtractionMethod { pca, paf };
const char* to_string(ExtractionMethod method);
ExtractionMethod parse_extraction_method(const std::string& text);

struct EigenSolution {
  Eigen::VectorXd eigenvalues;    // descending, length k
  Eigen::MatrixXd eigenvectors;   // unit-norm columns, k x q
  Eigen::MatrixXd loadings;       // eigenvector * sqrt(eigenvalue), k x q
  Eigen::VectorXd communalities;  // PAF only
  ExtractionMethod method = ExtractionMethod::pca;
  bool converged = false;
  std::size_t iterations = 0;
  bool heywood = false;       // a communality exceeded 1 and was clamped
  bool smc_fallback = false;  // SMC start replaced by max |r| per row

  std::size_t columns() const noexcept { return static_cast<std::size_t>(loadings.cols()); }
};

/// Eigenvalues of a symmetric matrix, largest first.
Eigen::VectorXd eigenvalues_descending(const Eigen::MatrixXd& symmetric);

/// Squared multiple correlations 1 - 1/diag(R^-1). When R is numerically
/// singular each entry falls back to the row's largest |off-diagonal| and
/// `fallback` is set.
Eigen::VectorXd squared_multiple_correlations(const Eigen::MatrixXd& r, bool& fallback);

/// Eigenvalues of R with squared multiple correlations on the diagonal.
Eigen::VectorXd reduced_eigenvalues(const Eigen::MatrixXd& r);

/// Full eigendecomposition; every component is kept.
EigenSolution pca(const CorrelationMatrix& c);

struct PafOptions {
  std::size_t max_iterations = 1000;
  double tolerance = 1e-6;
};

/// Iterated principal-axis factoring with q factors. Non-convergence is
/// reported through `converged`, never thrown.
EigenSolution paf(const CorrelationMatrix& c, std::size_t q, const PafOptions& options = {});

struct ComponentScores {
  Eigen::MatrixXd scores;             // n x q
  BinaryMatrix dichotomized;          // 1 iff score > cutoff
  double cutoff = 0.0;
  std::vector<bool> flipped;          // per component
  Eigen::MatrixXd loadings;           // oriented, k x q
  std::vector<bool> fully_missing;    // rows missing on every indicator
};

/// Steps 4-5: eigenvector-weighted standardized indicators, oriented so that
/// each component's loading sum is nonnegative, split at `cutoff`.
ComponentScores scores(const IndicatorMatrix& ind, const EigenSolution& sol, std::size_t q,
                       double cutoff = 0.0);

}  // namespace mispca
