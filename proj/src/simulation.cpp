#include "mispca/simulation.hpp"

#include <cmath>
#include <cstdio>

#include <Eigen/Cholesky>

#include "mispca/error.hpp"
#include "mispca/normal.hpp"
#include "mispca/parallel.hpp"

namespace mispca {

std::string SimCondition::label() const {
  char buf[128];
  std::snprintf(buf, sizeof buf, "c%zu_i%zu_n%zu_p%.2f_%s_%s", n_components, items_per_component, n, p_miss,
                to_string(corr_kind), to_string(method));
  return buf;
}

void SimCondition::validate() const {
  if (n_components == 0 || items_per_component == 0) {
    throw Error(ErrorCode::invalid_argument, "condition needs at least one component and one item");
  }
  if (n < 2) throw Error(ErrorCode::invalid_argument, "condition needs a sample size of at least 2");
  if (!(p_miss > 0.0 && p_miss < 1.0)) throw Error(ErrorCode::invalid_argument, "p_miss must lie in (0, 1)");
}

std::vector<SimCondition> factorial_grid(CorrelationKind kind, ExtractionMethod method) {
  std::vector<SimCondition> grid;
  for (std::size_t components : {1, 3, 5, 10}) {
    for (std::size_t items : {3, 5, 10}) {
      for (std::size_t n : {100, 250, 1000}) {
        for (double p : {0.10, 0.25, 0.50}) grid.push_back({components, items, n, p, kind, method});
      }
    }
  }
  return grid;
}

Eigen::MatrixXd block_correlation(const SimCondition& cond) {
  const auto p = static_cast<Eigen::Index>(cond.variables());
  const auto items = static_cast<Eigen::Index>(cond.items_per_component);
  Eigen::MatrixXd r = Eigen::MatrixXd::Constant(p, p, kBetweenBlockCorrelation);
  for (Eigen::Index b = 0; b < p; b += items) r.block(b, b, items, items).setConstant(kWithinBlockCorrelation);
  r.diagonal().setOnes();
  return r;
}

Eigen::MatrixXd block_factor(const SimCondition& cond) {
  cond.validate();
  const Eigen::MatrixXd r = block_correlation(cond);
  Eigen::LLT<Eigen::MatrixXd> llt(r);
  if (llt.info() != Eigen::Success || eigenvalues_descending(r).minCoeff() <= 0.0) {
    throw Error(ErrorCode::decomposition_failure, "block correlation is not positive definite for " + cond.label());
  }
  return llt.matrixL();
}

Eigen::MatrixXd generate_latent(const SimCondition& cond, const Eigen::MatrixXd& factor, Engine& engine) {
  const auto n = static_cast<Eigen::Index>(cond.n);
  const auto p = factor.rows();
  std::normal_distribution<double> normal;
  Eigen::MatrixXd z(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) z(i, j) = normal(engine);
  }
  return z * factor.transpose();
}

IndicatorMatrix dichotomize(const SimCondition& cond, const Eigen::MatrixXd& latent) {
  const double threshold = normal_quantile(1.0 - cond.p_miss);
  const BinaryMatrix values = (latent.array() > threshold).cast<std::uint8_t>();
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(latent.cols()));
  for (Eigen::Index j = 0; j < latent.cols(); ++j) names.push_back("v" + std::to_string(j + 1));
  return IndicatorMatrix::from_binary(values, names);
}

namespace {

Engine condition_engine(const SimCondition& c, std::uint64_t seed, std::size_t rep) {
  return make_engine({seed, c.n_components, c.items_per_component, c.n,
                      static_cast<std::uint64_t>(std::llround(c.p_miss * 1e6)),
                      static_cast<std::uint64_t>(c.corr_kind), static_cast<std::uint64_t>(c.method), rep});
}

}  // namespace

IndicatorMatrix generate(const SimCondition& cond, std::uint64_t seed) {
  const auto factor = block_factor(cond);
  Engine engine = condition_engine(cond, seed, 0);
  return dichotomize(cond, generate_latent(cond, factor, engine));
}

ReplicationOutcome replicate(const SimCondition& cond, const Eigen::MatrixXd& factor, std::uint64_t seed,
                             std::size_t rep, const SimOptions& options) {
  ReplicationOutcome out;
  Engine engine = condition_engine(cond, seed, rep);
  const IndicatorMatrix ind = dichotomize(cond, generate_latent(cond, factor, engine));
  const std::uint64_t pa_seed = engine();
  if (ind.cols() < 2) {
    out.failure = "fewer than two non-degenerate indicators";
    return out;
  }

  CorrelationMatrix corr;
  try {
    corr = repair_pd(cond.corr_kind == CorrelationKind::pearson ? pearson(ind) : tetrachoric(ind));
  } catch (const Error& e) {
    out.failure = e.what();
    return out;
  }

  const Spectrum spectrum = spectrum_for(cond.method);
  Eigen::VectorXd observed;
  try {
    observed = criterion_spectrum(corr.values, spectrum);
    if (cond.method == ExtractionMethod::paf && cond.n_components < ind.cols()) {
      if (!paf(corr, cond.n_components).converged) {
        out.failure = "principal-axis factoring did not converge";
        return out;
      }
    }
  } catch (const Error& e) {
    out.failure = e.what();
    return out;
  }
  out.converged = true;

  ParallelOptions pa;
  pa.reps = options.pa_reps;
  pa.percentile = options.percentile;
  pa.seed = pa_seed;
  pa.threads = 1;
  pa.spectrum = spectrum;
  const std::span<const double> eig(observed.data(), static_cast<std::size_t>(observed.size()));
  const auto decisions = evaluate_criteria(ind, eig, pa);
  for (std::size_t c = 0; c < decisions.size(); ++c) {
    if (decisions[c].converged) out.retained[c] = decisions[c].k_retained;
  }
  return out;
}

namespace {

void tally(ConditionResult& result, const ReplicationOutcome& outcome) {
  ++result.replications_run;
  if (!outcome.converged) {
    ++result.replications_failed;
    return;
  }
  for (std::size_t c = 0; c < outcome.retained.size(); ++c) {
    if (!outcome.retained[c]) continue;
    ++result.tallies[c].converged;
    if (*outcome.retained[c] == result.condition.n_components) ++result.tallies[c].correct;
  }
}

}  // namespace

ConditionResult run_condition(const SimCondition& cond, std::size_t reps, std::uint64_t seed,
                              const SimOptions& options) {
  if (reps < 1) throw Error(ErrorCode::invalid_argument, "at least one replication is required");
  const auto factor = block_factor(cond);
  std::vector<ReplicationOutcome> outcomes(reps);
  parallel_for(reps, options.threads,
               [&](std::size_t rep) { outcomes[rep] = replicate(cond, factor, seed, rep, options); });
  ConditionResult result;
  result.condition = cond;
  for (const auto& o : outcomes) tally(result, o);
  return result;
}

SimReport run_grid(const std::vector<SimCondition>& conditions, std::size_t reps, std::uint64_t seed,
                   const SimOptions& options) {
  if (conditions.empty()) throw Error(ErrorCode::invalid_argument, "empty condition list");
  if (reps < 1) throw Error(ErrorCode::invalid_argument, "at least one replication is required");
  std::vector<Eigen::MatrixXd> factors;
  factors.reserve(conditions.size());
  for (const auto& c : conditions) factors.push_back(block_factor(c));

  // Flattened (cell, rep) work units; reduction below runs in index order.
  std::vector<ReplicationOutcome> outcomes(conditions.size() * reps);
  parallel_for(outcomes.size(), options.threads, [&](std::size_t unit) {
    const std::size_t cell = unit / reps;
    outcomes[unit] = replicate(conditions[cell], factors[cell], seed, unit % reps, options);
  });

  SimReport report;
  report.reps = reps;
  report.seed = seed;
  report.cells.resize(conditions.size());
  for (std::size_t cell = 0; cell < conditions.size(); ++cell) {
    report.cells[cell].condition = conditions[cell];
    for (std::size_t rep = 0; rep < reps; ++rep) tally(report.cells[cell], outcomes[cell * reps + rep]);
  }
  for (std::size_t c = 0; c < kAllCriteria.size(); ++c) {
    double sum = 0.0;
    for (const auto& cell : report.cells) {
      if (cell.tallies[c].converged == 0) continue;
      sum += cell.tallies[c].proportion();
      ++report.cells_scored[c];
      if (cell.tallies[c].success()) ++report.cells_success[c];
    }
    report.aggregate[c] = report.cells_scored[c] ? sum / static_cast<double>(report.cells_scored[c]) : 0.0;
  }
  return report;
}

}  // namespace mispca
