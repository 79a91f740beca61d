#include "mispca/extraction.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "mispca/error.hpp"

namespace mispca {

const char* to_string(ExtractionMethod method) { return method == ExtractionMethod::pca ? "pca" : "paf"; }

ExtractionMethod parse_extraction_method(const std::string& text) {
  if (text == "pca") return ExtractionMethod::pca;
  if (text == "paf") return ExtractionMethod::paf;
  throw Error(ErrorCode::invalid_argument, "unknown extraction method '" + text + "'");
}

namespace {

struct Decomposition {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // matching columns
};

Decomposition decompose(const Eigen::MatrixXd& m) {
  if (!m.allFinite()) throw Error(ErrorCode::decomposition_failure, "matrix has non-finite entries");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  if (eig.info() != Eigen::Success) throw Error(ErrorCode::decomposition_failure, "eigensolver did not converge");
  // Eigen returns ascending order.
  return {eig.eigenvalues().reverse(), eig.eigenvectors().rowwise().reverse()};
}

}  // namespace

Eigen::VectorXd eigenvalues_descending(const Eigen::MatrixXd& symmetric) {
  if (!symmetric.allFinite()) throw Error(ErrorCode::decomposition_failure, "matrix has non-finite entries");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetric, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw Error(ErrorCode::decomposition_failure, "eigensolver did not converge");
  return eig.eigenvalues().reverse();
}

Eigen::VectorXd squared_multiple_correlations(const Eigen::MatrixXd& r, bool& fallback) {
  const Eigen::Index k = r.rows();
  fallback = false;
  Eigen::LLT<Eigen::MatrixXd> llt(r);
  const double min_eig = k > 0 ? eigenvalues_descending(r).minCoeff() : 1.0;
  if (llt.info() == Eigen::Success && min_eig > 1e-10) {
    const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(k, k));
    Eigen::VectorXd smc(k);
    for (Eigen::Index i = 0; i < k; ++i) smc(i) = 1.0 - 1.0 / inv(i, i);
    return smc.cwiseMax(0.0).cwiseMin(1.0);
  }
  fallback = true;
  Eigen::VectorXd smc = Eigen::VectorXd::Zero(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      if (i != j) smc(i) = std::max(smc(i), std::abs(r(i, j)));
    }
  }
  return smc;
}

Eigen::VectorXd reduced_eigenvalues(const Eigen::MatrixXd& r) {
  bool fallback = false;
  Eigen::MatrixXd reduced = r;
  reduced.diagonal() = squared_multiple_correlations(r, fallback);
  return eigenvalues_descending(reduced);
}

EigenSolution pca(const CorrelationMatrix& c) {
  const auto d = decompose(c.values);
  EigenSolution sol;
  sol.method = ExtractionMethod::pca;
  sol.eigenvalues = d.values;
  sol.eigenvectors = d.vectors;
  sol.loadings = d.vectors * d.values.cwiseMax(0.0).cwiseSqrt().asDiagonal();
  sol.converged = true;
  sol.iterations = 1;
  return sol;
}

EigenSolution paf(const CorrelationMatrix& c, std::size_t q, const PafOptions& options) {
  const auto k = static_cast<std::size_t>(c.values.rows());
  if (q == 0 || q >= k) {
    throw Error(ErrorCode::dimension_mismatch,
                "principal-axis factoring needs 0 < q < k (q = " + std::to_string(q) + ", k = " + std::to_string(k) + ")");
  }
  const auto qi = static_cast<Eigen::Index>(q);
  EigenSolution sol;
  sol.method = ExtractionMethod::paf;
  Eigen::VectorXd h2 = squared_multiple_correlations(c.values, sol.smc_fallback);

  Eigen::MatrixXd reduced = c.values;
  Decomposition d;
  while (sol.iterations < options.max_iterations) {
    ++sol.iterations;
    reduced.diagonal() = h2;
    d = decompose(reduced);
    Eigen::MatrixXd loadings = d.vectors.leftCols(qi) * d.values.head(qi).cwiseMax(0.0).cwiseSqrt().asDiagonal();
    Eigen::VectorXd next = loadings.rowwise().squaredNorm();
    if ((next.array() > 1.0).any()) {
      sol.heywood = true;
      next = next.cwiseMin(1.0);
    }
    const double change = (next - h2).cwiseAbs().maxCoeff();
    h2 = next;
    sol.loadings = std::move(loadings);
    if (change < options.tolerance) {
      sol.converged = true;
      break;
    }
  }
  sol.eigenvalues = d.values;
  sol.eigenvectors = d.vectors.leftCols(qi);
  sol.communalities = h2;
  return sol;
}

ComponentScores scores(const IndicatorMatrix& ind, const EigenSolution& sol, std::size_t q, double cutoff) {
  if (q == 0 || q > sol.columns() || q > static_cast<std::size_t>(sol.eigenvectors.cols())) {
    throw Error(ErrorCode::dimension_mismatch, "requested " + std::to_string(q) + " components but the solution has " +
                                                   std::to_string(sol.columns()));
  }
  if (static_cast<std::size_t>(sol.eigenvectors.rows()) != ind.cols()) {
    throw Error(ErrorCode::dimension_mismatch, "solution size does not match the indicator matrix");
  }
  const auto qi = static_cast<Eigen::Index>(q);
  const auto n = static_cast<Eigen::Index>(ind.rows());

  Eigen::MatrixXd z = ind.as_double();
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    const double mean = z.col(j).mean();
    z.col(j).array() -= mean;
    const double sd = std::sqrt(z.col(j).squaredNorm() / static_cast<double>(n - 1));
    if (!(sd > 0.0)) throw Error(ErrorCode::degenerate_column, "indicator '" + ind.names()[static_cast<std::size_t>(j)] + "' has zero variance");
    z.col(j) /= sd;
  }

  ComponentScores out;
  out.cutoff = cutoff;
  Eigen::MatrixXd weights = sol.eigenvectors.leftCols(qi);
  out.loadings = sol.loadings.leftCols(qi);
  out.flipped.assign(q, false);
  for (Eigen::Index j = 0; j < qi; ++j) {
    double direction = out.loadings.col(j).sum();
    if (direction == 0.0) direction = weights.col(j).sum();
    if (direction < 0.0) {
      weights.col(j) *= -1.0;
      out.loadings.col(j) *= -1.0;
      out.flipped[static_cast<std::size_t>(j)] = true;
    }
  }
  out.scores = z * weights;
  out.dichotomized = (out.scores.array() > cutoff).cast<std::uint8_t>();
  out.fully_missing = ind.fully_missing_rows();
  return out;
}

}  // namespace mispca
