#include "mispca/correlation.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Eigenvalues>
#include <boost/math/tools/minima.hpp>

#include "mispca/error.hpp"
#include "mispca/normal.hpp"

namespace mispca {

const char* to_string(CorrelationKind kind) {
  return kind == CorrelationKind::pearson ? "pearson" : "tetrachoric";
}

CorrelationKind parse_correlation_kind(const std::string& text) {
  if (text == "pearson") return CorrelationKind::pearson;
  if (text == "tetrachoric") return CorrelationKind::tetrachoric;
  throw Error(ErrorCode::invalid_argument, "unknown correlation kind '" + text + "'");
}

namespace {

// Column-packed bits so that pair counts reduce to popcounts.
class PackedColumns {
 public:
  explicit PackedColumns(const BinaryMatrix& values)
      : rows_(static_cast<std::size_t>(values.rows())),
        words_((rows_ + 63) / 64),
        bits_(words_ * static_cast<std::size_t>(values.cols()), 0),
        ones_(static_cast<std::size_t>(values.cols()), 0) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      std::uint64_t* col = &bits_[static_cast<std::size_t>(j) * words_];
      std::size_t ones = 0;
      for (Eigen::Index i = 0; i < values.rows(); ++i) {
        if (values(i, j)) {
          col[static_cast<std::size_t>(i) / 64] |= std::uint64_t{1} << (static_cast<std::size_t>(i) % 64);
          ++ones;
        }
      }
      ones_[static_cast<std::size_t>(j)] = ones;
    }
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t ones(std::size_t j) const { return ones_[j]; }

  std::size_t both(std::size_t a, std::size_t b) const {
    const std::uint64_t* x = &bits_[a * words_];
    const std::uint64_t* y = &bits_[b * words_];
    std::size_t c = 0;
    for (std::size_t w = 0; w < words_; ++w) c += static_cast<std::size_t>(std::popcount(x[w] & y[w]));
    return c;
  }

  TwoByTwo table(std::size_t a, std::size_t b) const {
    const double n = static_cast<double>(rows_);
    const double n11 = static_cast<double>(both(a, b));
    const double na = static_cast<double>(ones_[a]);
    const double nb = static_cast<double>(ones_[b]);
    return {n - na - nb + n11, nb - n11, na - n11, n11};
  }

 private:
  std::size_t rows_, words_;
  std::vector<std::uint64_t> bits_;
  std::vector<std::size_t> ones_;
};

}  // namespace

CorrelationMatrix pearson(const BinaryMatrix& values) {
  const PackedColumns packed(values);
  const auto k = static_cast<std::size_t>(values.cols());
  const double n = static_cast<double>(packed.rows());
  CorrelationMatrix out;
  out.kind = CorrelationKind::pearson;
  out.values = Eigen::MatrixXd::Identity(values.cols(), values.cols());
  std::vector<double> spread(k);
  for (std::size_t j = 0; j < k; ++j) {
    const double ones = static_cast<double>(packed.ones(j));
    spread[j] = ones * (n - ones);
    if (spread[j] <= 0.0) {
      throw Error(ErrorCode::degenerate_column, "column " + std::to_string(j) + " has zero variance");
    }
  }
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      const double n11 = static_cast<double>(packed.both(a, b));
      const double num = n * n11 - static_cast<double>(packed.ones(a)) * static_cast<double>(packed.ones(b));
      const double r = std::clamp(num / std::sqrt(spread[a] * spread[b]), -1.0, 1.0);
      out.values(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = r;
      out.values(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = r;
    }
  }
  return out;
}

CorrelationMatrix pearson(const IndicatorMatrix& ind) { return pearson(ind.values()); }

double tetrachoric_pair(TwoByTwo t) {
  if (std::min({t.n00, t.n01, t.n10, t.n11}) < 0.0 || t.total() <= 0.0) {
    throw Error(ErrorCode::invalid_argument, "2x2 table needs nonnegative counts and a positive total");
  }
  if (std::min({t.n00, t.n01, t.n10, t.n11}) == 0.0) {
    t.n00 += 0.5;
    t.n01 += 0.5;
    t.n10 += 0.5;
    t.n11 += 0.5;
  }
  const double n = t.total();
  // Indicator = 1 when the latent value exceeds its threshold.
  const double below_a = (t.n00 + t.n01) / n;
  const double below_b = (t.n00 + t.n10) / n;
  const double tau_a = normal_quantile(below_a);
  const double tau_b = normal_quantile(below_b);

  auto negative_loglik = [&](double rho) {
    const double p00 = bivariate_normal_cdf(tau_a, tau_b, rho);
    const double p01 = below_a - p00;
    const double p10 = below_b - p00;
    const double p11 = 1.0 - below_a - below_b + p00;
    constexpr double floor = 1e-300;
    return -(t.n00 * std::log(std::max(p00, floor)) + t.n01 * std::log(std::max(p01, floor)) +
             t.n10 * std::log(std::max(p10, floor)) + t.n11 * std::log(std::max(p11, floor)));
  };

  const auto [rho, value] =
      boost::math::tools::brent_find_minima(negative_loglik, -kTetrachoricBound, kTetrachoricBound, 40);
  if (!std::isfinite(value) || !std::isfinite(rho)) {
    throw Error(ErrorCode::estimation_failure, "tetrachoric likelihood is not finite");
  }
  return std::clamp(rho, -kTetrachoricBound, kTetrachoricBound);
}

CorrelationMatrix tetrachoric(const IndicatorMatrix& ind) {
  const PackedColumns packed(ind.values());
  const std::size_t k = ind.cols();
  CorrelationMatrix out;
  out.kind = CorrelationKind::tetrachoric;
  out.values = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      double r = 0.0;
      try {
        r = tetrachoric_pair(packed.table(a, b));
      } catch (const Error& e) {
        throw PairEstimationError(a, b, "tetrachoric estimate for pair (" + std::to_string(a) + ", " +
                                            std::to_string(b) + ") failed: " + e.what());
      }
      out.values(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = r;
      out.values(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = r;
    }
  }
  return out;
}

CorrelationMatrix repair_pd(CorrelationMatrix c) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c.values, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorCode::decomposition_failure, "eigendecomposition failed during PD repair");
  }
  const double min_before = eig.eigenvalues().minCoeff();
  c.min_eigenvalue_before_repair = min_before;
  if (min_before >= kMinEigenvalue) return c;

  // Rescaling to unit diagonal can pull the smallest eigenvalue back under the
  // floor, so the clip level is raised until the rescaled matrix clears it.
  Eigen::MatrixXd repaired = c.values;
  double floor = kMinEigenvalue * (1.0 + 1e-3);
  for (int attempt = 0; attempt < 50; ++attempt) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> full(c.values);
    Eigen::VectorXd lambda = full.eigenvalues().cwiseMax(floor);
    Eigen::MatrixXd rebuilt = full.eigenvectors() * lambda.asDiagonal() * full.eigenvectors().transpose();
    Eigen::VectorXd scale = rebuilt.diagonal().cwiseSqrt().cwiseInverse();
    repaired = scale.asDiagonal() * rebuilt * scale.asDiagonal();
    repaired = 0.5 * (repaired + repaired.transpose()).eval();
    repaired.diagonal().setOnes();
    const double min_after = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(repaired, Eigen::EigenvaluesOnly)
                                 .eigenvalues()
                                 .minCoeff();
    if (min_after >= kMinEigenvalue) break;
    floor *= std::max(2.0, kMinEigenvalue / std::max(min_after, 1e-300));
  }
  c.values = std::move(repaired);
  c.pd_repaired = true;
  return c;
}

}  // namespace mispca
