#include "mispca/mechanism.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <Eigen/Cholesky>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "mispca/error.hpp"

namespace mispca {

const char* to_string(ScreenTest test) { return test == ScreenTest::welch_t ? "welch_t" : "chi_square"; }

namespace {

bool included(const RowMask& include, std::size_t i) { return include.empty() || include[i]; }

void check_flag(const Dataset& data, const Flag& flag, const RowMask& include) {
  if (flag.size() != data.rows()) throw Error(ErrorCode::dimension_mismatch, "flag length does not match the dataset");
  if (!include.empty() && include.size() != data.rows()) {
    throw Error(ErrorCode::dimension_mismatch, "row mask length does not match the dataset");
  }
}

// Category label of a cell; numeric cells are printed so that coded columns
// can act as strata or factors.
std::string level_of(const Column& col, std::size_t i) {
  if (col.type() == ColumnType::categorical) return *col.text(i);
  std::ostringstream os;
  os << col.number(i);
  return os.str();
}

GroupSummary summarize(const std::vector<double>& v) {
  GroupSummary g;
  g.n = v.size();
  if (v.empty()) return g;
  g.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - g.mean) * (x - g.mean);
    g.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return g;
}

ScreenResult welch(const Column& col, const Flag& flag, const RowMask& include) {
  ScreenResult r;
  r.variable = col.name();
  r.test = ScreenTest::welch_t;
  std::vector<double> g0, g1;
  for (std::size_t i = 0; i < flag.size(); ++i) {
    if (!included(include, i)) continue;
    if (col.is_missing(i)) {
      ++r.n_excluded;
      continue;
    }
    (flag[i] ? g1 : g0).push_back(col.number(i));
  }
  r.flag0 = summarize(g0);
  r.flag1 = summarize(g1);
  r.n_used = g0.size() + g1.size();
  if (g0.size() < 2 || g1.size() < 2) {
    r.testable = false;
    r.note = "fewer than two observed values in a group";
    return r;
  }
  const double v0 = r.flag0.sd * r.flag0.sd / static_cast<double>(g0.size());
  const double v1 = r.flag1.sd * r.flag1.sd / static_cast<double>(g1.size());
  const double diff = r.flag1.mean - r.flag0.mean;
  const double se2 = v0 + v1;
  if (se2 == 0.0) {
    r.statistic = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
    r.df = static_cast<double>(r.n_used - 2);
    r.p_value = diff == 0.0 ? 1.0 : 0.0;
    return r;
  }
  r.statistic = diff / std::sqrt(se2);
  r.df = se2 * se2 /
         (v0 * v0 / static_cast<double>(g0.size() - 1) + v1 * v1 / static_cast<double>(g1.size() - 1));
  const boost::math::students_t dist(r.df);
  r.p_value = std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.statistic))), 0.0, 1.0);
  return r;
}

ScreenResult chi_square(const Column& col, const Flag& flag, const RowMask& include) {
  ScreenResult r;
  r.variable = col.name();
  r.test = ScreenTest::chi_square;
  std::map<std::string, std::array<std::size_t, 2>> table;
  for (std::size_t i = 0; i < flag.size(); ++i) {
    if (!included(include, i)) continue;
    if (col.is_missing(i)) {
      ++r.n_excluded;
      continue;
    }
    ++table[level_of(col, i)][flag[i] ? 1 : 0];
    ++r.n_used;
  }
  std::array<double, 2> col_totals{0.0, 0.0};
  for (const auto& [level, counts] : table) {
    r.levels.push_back(level);
    r.counts.push_back(counts);
    col_totals[0] += static_cast<double>(counts[0]);
    col_totals[1] += static_cast<double>(counts[1]);
  }
  if (table.size() < 2 || col_totals[0] == 0.0 || col_totals[1] == 0.0) {
    r.testable = false;
    r.note = "contingency table has a single nonempty row or column";
    return r;
  }
  const double n = col_totals[0] + col_totals[1];
  double stat = 0.0;
  for (const auto& counts : r.counts) {
    const double row = static_cast<double>(counts[0] + counts[1]);
    for (int c = 0; c < 2; ++c) {
      const double expected = row * col_totals[static_cast<std::size_t>(c)] / n;
      const double d = static_cast<double>(counts[static_cast<std::size_t>(c)]) - expected;
      stat += d * d / expected;
    }
  }
  r.statistic = stat;
  r.df = static_cast<double>(table.size() - 1);
  const boost::math::chi_squared dist(r.df);
  r.p_value = std::clamp(boost::math::cdf(boost::math::complement(dist, stat)), 0.0, 1.0);
  return r;
}

std::pair<std::size_t, std::size_t> class_counts(const Flag& flag, const RowMask& include) {
  std::size_t n0 = 0, n1 = 0;
  for (std::size_t i = 0; i < flag.size(); ++i) {
    if (!included(include, i)) continue;
    (flag[i] ? n1 : n0) += 1;
  }
  return {n0, n1};
}

}  // namespace

std::vector<ScreenResult> screen(const Dataset& data, const Flag& flag, const std::vector<std::string>& variables,
                                 const RowMask& include) {
  check_flag(data, flag, include);
  const auto [n0, n1] = class_counts(flag, include);
  if (n0 == 0 || n1 == 0) throw Error(ErrorCode::invalid_argument, "component flag has a single class");
  std::vector<ScreenResult> out;
  out.reserve(variables.size());
  for (const auto& name : variables) {
    const Column& col = data.column(name);
    out.push_back(col.type() == ColumnType::numeric ? welch(col, flag, include) : chi_square(col, flag, include));
  }
  return out;
}

double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw Error(ErrorCode::dimension_mismatch, "scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  std::size_t n1 = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) {
      if (labels[order[t]]) {
        rank_sum += midrank;
        ++n1;
      }
    }
    i = j;
  }
  const std::size_t n0 = n - n1;
  if (n1 == 0 || n0 == 0) throw Error(ErrorCode::undefined_auc, "AUC needs both classes");
  const double u = rank_sum - static_cast<double>(n1) * static_cast<double>(n1 + 1) / 2.0;
  return u / (static_cast<double>(n1) * static_cast<double>(n0));
}

namespace {

double log1pexp(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_likelihood(std::span<const std::uint8_t> y, const Eigen::VectorXd& eta) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) ll += (y[static_cast<std::size_t>(i)] ? eta(i) : 0.0) - log1pexp(eta(i));
  return ll;
}

// Greedy left-to-right selection of columns that are not in the span of the
// columns already kept.
std::vector<bool> aliased_columns(const Eigen::MatrixXd& design) {
  const Eigen::Index n = design.rows();
  std::vector<bool> aliased(static_cast<std::size_t>(design.cols()), false);
  Eigen::MatrixXd basis(n, 0);
  for (Eigen::Index j = 0; j < design.cols(); ++j) {
    Eigen::VectorXd v = design.col(j);
    const double norm = v.norm();
    for (int pass = 0; pass < 2; ++pass) {
      if (basis.cols() > 0) v -= basis * (basis.transpose() * v);
    }
    const double residual = v.norm();
    if (norm == 0.0 || residual <= 1e-9 * std::max(norm, 1.0)) {
      aliased[static_cast<std::size_t>(j)] = true;
      continue;
    }
    basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
    basis.col(basis.cols() - 1) = v / residual;
  }
  return aliased;
}

}  // namespace

LogisticFit fit_logistic(std::span<const std::uint8_t> y, const Eigen::MatrixXd& x, std::vector<std::string> names) {
  const auto n = static_cast<Eigen::Index>(y.size());
  if (x.rows() != n) throw Error(ErrorCode::dimension_mismatch, "design rows do not match the response length");
  if (!x.allFinite()) throw Error(ErrorCode::invalid_argument, "design matrix has non-finite entries");
  if (names.empty()) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) names.push_back("x" + std::to_string(j + 1));
  }
  if (names.size() != static_cast<std::size_t>(x.cols())) {
    throw Error(ErrorCode::dimension_mismatch, "predictor names do not match the design columns");
  }
  std::size_t n1 = 0;
  for (auto v : y) n1 += v ? 1 : 0;
  if (n1 == 0 || n1 == y.size()) throw Error(ErrorCode::invalid_argument, "logistic response needs both classes");

  Eigen::MatrixXd full(n, x.cols() + 1);
  full.col(0).setOnes();
  full.rightCols(x.cols()) = x;

  LogisticFit fit;
  fit.n = y.size();
  fit.n_positive = n1;
  fit.names.push_back("(intercept)");
  fit.names.insert(fit.names.end(), names.begin(), names.end());
  fit.aliased = aliased_columns(full);

  std::vector<Eigen::Index> kept;
  for (Eigen::Index j = 0; j < full.cols(); ++j) {
    if (!fit.aliased[static_cast<std::size_t>(j)]) kept.push_back(j);
  }
  Eigen::MatrixXd design(n, static_cast<Eigen::Index>(kept.size()));
  for (std::size_t c = 0; c < kept.size(); ++c) design.col(static_cast<Eigen::Index>(c)) = full.col(kept[c]);
  const Eigen::Index p = design.cols();

  Eigen::VectorXd yv(n);
  for (Eigen::Index i = 0; i < n; ++i) yv(i) = y[static_cast<std::size_t>(i)] ? 1.0 : 0.0;

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd prob(n), weight(n);
  double ll = log_likelihood(y, eta);
  Eigen::MatrixXd information(p, p);

  auto refresh = [&] {
    for (Eigen::Index i = 0; i < n; ++i) {
      prob(i) = logistic(eta(i));
      weight(i) = prob(i) * (1.0 - prob(i));
    }
    information = design.transpose() * weight.asDiagonal() * design;
  };
  refresh();

  for (fit.iterations = 0; fit.iterations < kLogisticMaxIterations;) {
    const Eigen::VectorXd score = design.transpose() * (yv - prob);
    if (score.cwiseAbs().maxCoeff() < kLogisticScoreTolerance) {
      fit.converged = true;
      break;
    }
    ++fit.iterations;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(information);
    Eigen::VectorXd step = ldlt.solve(score);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) break;

    // Step halving keeps the likelihood from decreasing beyond roundoff.
    const double slack = 1e-12 * std::max(1.0, std::abs(ll));
    Eigen::VectorXd candidate = beta + step;
    Eigen::VectorXd candidate_eta = design * candidate;
    double candidate_ll = log_likelihood(y, candidate_eta);
    for (int halving = 0; halving < 30 && !(candidate_ll >= ll - slack); ++halving) {
      step *= 0.5;
      candidate = beta + step;
      candidate_eta = design * candidate;
      candidate_ll = log_likelihood(y, candidate_eta);
    }
    if (!(candidate_ll >= ll - slack)) break;
    beta = candidate;
    eta = candidate_eta;
    ll = candidate_ll;
    refresh();
  }

  // Separation: one class fitted to within 1e-8 of its label throughout, or
  // a coefficient that is enormous on the standardized scale.
  bool ones_saturated = true, zeros_saturated = true;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (yv(i) == 1.0 && prob(i) < 1.0 - kSeparationProbability) ones_saturated = false;
    if (yv(i) == 0.0 && prob(i) > kSeparationProbability) zeros_saturated = false;
  }
  fit.separated = ones_saturated || zeros_saturated;
  for (Eigen::Index c = 1; c < p; ++c) {
    const Eigen::VectorXd centered = design.col(c).array() - design.col(c).mean();
    const double sd = std::sqrt(centered.squaredNorm() / static_cast<double>(std::max<Eigen::Index>(n - 1, 1)));
    if (std::abs(beta(c)) * sd > kSeparationStandardizedCoefficient) fit.separated = true;
  }

  fit.coefficients.assign(fit.names.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t c = 0; c < kept.size(); ++c) {
    fit.coefficients[static_cast<std::size_t>(kept[c])] = beta(static_cast<Eigen::Index>(c));
  }
  if (!fit.separated) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(information);
    const Eigen::MatrixXd covariance = ldlt.solve(Eigen::MatrixXd::Identity(p, p));
    std::vector<double> se(fit.names.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t c = 0; c < kept.size(); ++c) {
      se[static_cast<std::size_t>(kept[c])] = std::sqrt(covariance(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c)));
    }
    fit.standard_errors = std::move(se);
  }

  const double n1d = static_cast<double>(n1);
  const double n0d = static_cast<double>(fit.n - n1);
  fit.log_likelihood = ll;
  fit.null_log_likelihood = n1d * std::log(n1d / static_cast<double>(fit.n)) + n0d * std::log(n0d / static_cast<double>(fit.n));
  fit.lr_chi2 = 2.0 * (fit.log_likelihood - fit.null_log_likelihood);
  fit.df = static_cast<std::size_t>(p - 1);
  fit.pseudo_r2 = 1.0 - fit.log_likelihood / fit.null_log_likelihood;
  fit.linear_predictor = eta;
  fit.auc = roc_auc(std::span<const double>(eta.data(), static_cast<std::size_t>(n)), y);

  std::size_t tp = 0, tn = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool predicted = prob(i) >= 0.5;
    if (predicted && yv(i) == 1.0) ++tp;
    if (!predicted && yv(i) == 0.0) ++tn;
  }
  fit.sensitivity = static_cast<double>(tp) / n1d;
  fit.specificity = static_cast<double>(tn) / n0d;
  fit.correct_pct = static_cast<double>(tp + tn) / static_cast<double>(fit.n);
  return fit;
}

LogisticModelResult fit_model(const Dataset& data, const Flag& flag, const LogisticModelSpec& spec,
                              const RowMask& include) {
  check_flag(data, flag, include);
  LogisticModelResult result;
  result.name = spec.name;
  result.predictors = spec.predictors;

  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    if (!included(include, i)) continue;
    bool complete = true;
    for (const auto& name : spec.predictors) complete = complete && !data.column(name).is_missing(i);
    if (complete) {
      rows.push_back(i);
    } else {
      ++result.n_excluded;
    }
  }
  result.n_used = rows.size();

  std::vector<Eigen::VectorXd> columns;
  std::vector<std::string> names;
  for (const auto& name : spec.predictors) {
    const Column& col = data.column(name);
    if (col.type() == ColumnType::numeric) {
      Eigen::VectorXd v(static_cast<Eigen::Index>(rows.size()));
      for (std::size_t r = 0; r < rows.size(); ++r) v(static_cast<Eigen::Index>(r)) = col.number(rows[r]);
      columns.push_back(std::move(v));
      names.push_back(name);
      continue;
    }
    std::set<std::string> levels;
    for (std::size_t r : rows) levels.insert(*col.text(r));
    for (auto it = levels.begin(); it != levels.end(); ++it) {
      if (it == levels.begin()) continue;  // reference level
      Eigen::VectorXd v(static_cast<Eigen::Index>(rows.size()));
      for (std::size_t r = 0; r < rows.size(); ++r) v(static_cast<Eigen::Index>(r)) = *col.text(rows[r]) == *it ? 1.0 : 0.0;
      columns.push_back(std::move(v));
      names.push_back(name + "=" + *it);
    }
  }

  Flag y;
  y.reserve(rows.size());
  std::size_t positives = 0;
  for (std::size_t r : rows) {
    y.push_back(flag[r]);
    positives += flag[r] ? 1 : 0;
  }
  if (rows.empty() || positives == 0 || positives == rows.size()) {
    result.note = "response has a single class among complete cases";
    return result;
  }
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) x.col(static_cast<Eigen::Index>(c)) = columns[c];
  result.fit = fit_logistic(y, x, names);
  return result;
}

std::vector<LogisticModelSpec> simple_and_joint_models(const std::vector<std::string>& predictors) {
  std::vector<LogisticModelSpec> models;
  for (std::size_t j = 0; j < predictors.size(); ++j) {
    models.push_back({"model" + std::to_string(j + 1), {predictors[j]}});
  }
  if (predictors.size() > 1) models.push_back({"model" + std::to_string(predictors.size() + 1), predictors});
  return models;
}

std::vector<StratumResult> stratified_rerun(const Dataset& data, const Flag& flag, const std::string& strata,
                                            const MechanismPlan& plan, const RowMask& include) {
  check_flag(data, flag, include);
  const Column& col = data.column(strata);
  std::map<std::string, RowMask> masks;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    if (!included(include, i) || col.is_missing(i)) continue;
    auto& mask = masks[level_of(col, i)];
    if (mask.empty()) mask.assign(data.rows(), false);
    mask[i] = true;
  }
  if (masks.size() < 2) {
    throw Error(ErrorCode::invalid_argument, "stratifying column '" + strata + "' needs at least two levels");
  }
  std::vector<StratumResult> out;
  for (const auto& [level, mask] : masks) {
    StratumResult s;
    s.level = level;
    s.n = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
    const auto [n0, n1] = class_counts(flag, mask);
    if (n0 == 0 || n1 == 0) {
      s.testable = false;
      s.note = "component flag is constant within this stratum";
      out.push_back(std::move(s));
      continue;
    }
    s.screens = screen(data, flag, plan.screen_variables, mask);
    for (const auto& model : plan.models) s.fits.push_back(fit_model(data, flag, model, mask));
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace mispca
