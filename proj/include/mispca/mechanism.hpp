#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mispca/dataset.hpp"

namespace mispca {

/// A binary column; one entry per dataset row.
using Flag = std::vector<std::uint8_t>;
/// Rows that take part in an analysis; empty means every row.
using RowMask = std::vector<bool>;

enum class ScreenTest { welch_t, chi_square };
const char* to_string(ScreenTest test);

struct GroupSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;
};

struct ScreenResult {
  std::string variable;
  ScreenTest test = ScreenTest::welch_t;
  bool testable = true;
  std::string note;  // why the variable could not be tested
  double statistic = 0.0;
  double df = 0.0;
  double p_value = 1.0;
  std::size_t n_used = 0;
  std::size_t n_excluded = 0;  // rows with a missing cell
  GroupSummary flag0, flag1;   // welch_t
  std::vector<std::string> levels;                       // chi_square rows
  std::vector<std::array<std::size_t, 2>> counts;        // per level: flag 0, flag 1
};

/// Step 6: Welch t for numeric variables, chi-square independence for
/// categorical ones, each split by `flag`. Throws invalid_argument when the
/// flag has a single class over the included rows.
std::vector<ScreenResult> screen(const Dataset& data, const Flag& flag, const std::vector<std::string>& variables,
                                 const RowMask& include = {});

struct LogisticFit {
  std::vector<std::string> names;              // "(intercept)" first
  std::vector<double> coefficients;            // NaN for aliased columns
  std::optional<std::vector<double>> standard_errors;  // absent under separation
  std::vector<bool> aliased;
  double log_likelihood = 0.0;
  double null_log_likelihood = 0.0;
  double lr_chi2 = 0.0;
  std::size_t df = 0;
  double pseudo_r2 = 0.0;  // McFadden
  double auc = 0.5;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double correct_pct = 0.0;  // fraction in [0, 1]
  bool separated = false;
  bool converged = false;
  std::size_t iterations = 0;
  std::size_t n = 0;
  std::size_t n_positive = 0;
  Eigen::VectorXd linear_predictor;
};

inline constexpr std::size_t kLogisticMaxIterations = 100;
inline constexpr double kLogisticScoreTolerance = 1e-8;
inline constexpr double kSeparationProbability = 1e-8;
inline constexpr double kSeparationStandardizedCoefficient = 15.0;

/// Step 7: ML logistic regression by iteratively reweighted least squares.
/// The intercept is added here; `x` holds only the predictors. Aliased
/// columns are dropped left to right and reported.
LogisticFit fit_logistic(std::span<const std::uint8_t> y, const Eigen::MatrixXd& x,
                         std::vector<std::string> names = {});

/// Mann-Whitney AUC with midranks for ties. Throws undefined_auc when a
/// class is absent.
double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct LogisticModelSpec {
  std::string name;
  std::vector<std::string> predictors;
};

struct LogisticModelResult {
  std::string name;
  std::vector<std::string> predictors;
  std::optional<LogisticFit> fit;
  std::size_t n_used = 0;
  std::size_t n_excluded = 0;  // complete-case exclusions
  std::string note;            // set when the model could not be fit
};

/// Builds the design from dataset columns (numeric as-is, categorical as
/// treatment dummies against the first sorted level) over complete cases.
LogisticModelResult fit_model(const Dataset& data, const Flag& flag, const LogisticModelSpec& spec,
                              const RowMask& include = {});

/// One simple model per predictor followed by one model with all of them.
std::vector<LogisticModelSpec> simple_and_joint_models(const std::vector<std::string>& predictors);

struct MechanismPlan {
  std::vector<std::string> screen_variables;
  std::vector<LogisticModelSpec> models;
};

struct StratumResult {
  std::string level;
  std::size_t n = 0;
  bool testable = true;
  std::string note;
  std::vector<ScreenResult> screens;
  std::vector<LogisticModelResult> fits;
};

/// Step 8: Steps 6-7 repeated inside each level of a categorical column.
std::vector<StratumResult> stratified_rerun(const Dataset& data, const Flag& flag, const std::string& strata,
                                            const MechanismPlan& plan, const RowMask& include = {});

}  // namespace mispca
