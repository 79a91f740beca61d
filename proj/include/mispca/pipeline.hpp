#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mispca/correlation.hpp"
#include "mispca/dataset.hpp"
#include "mispca/error.hpp"
#include "mispca/extraction.hpp"
#include "mispca/indicators.hpp"
#include "mispca/mechanism.hpp"
#include "mispca/retention.hpp"
#include "mispca/simulation.hpp"

namespace mispca {

inline constexpr int kSchemaVersion = 1;

/// A module error tagged with the pipeline step that raised it.
class StepError : public Error {
 public:
  StepError(std::string step, const Error& cause)
      : Error(cause.code(), step + ": " + cause.what()), step_(std::move(step)) {}
  const std::string& step() const noexcept { return step_; }

 private:
  std::string step_;
};

struct RunConfig {
  std::string input_path;
  std::vector<std::string> missing_sentinels{"", "NA", "."};
  char delimiter = ',';
  std::vector<std::string> columns;  // empty selects every column
  CorrelationKind correlation_kind = CorrelationKind::pearson;
  ExtractionMethod extraction_method = ExtractionMethod::pca;
  std::string criterion = "parallel";  // a criterion name or "auto"
  std::optional<std::size_t> items_per_component;  // hints for "auto"
  std::optional<std::size_t> expected_components;
  double cutoff = 0.0;
  std::size_t pa_reps = 100;
  double percentile = 0.95;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> strata_column;
  std::vector<std::string> covariate_columns;
  bool drop_fully_missing_patterns = false;
  std::string output_dir = ".";
  std::vector<std::string> output_formats{"json", "csv", "md"};
  unsigned threads = 1;  // not part of the manifest: results do not depend on it

  /// Throws invalid_argument on inconsistent settings.
  void validate() const;
  bool wants(const std::string& format) const;
};

struct SkippedStep {
  std::string step;
  std::string reason;
};

struct ComponentMechanism {
  std::size_t component = 0;  // 1-based
  std::size_t n_flag0 = 0, n_flag1 = 0;
  std::vector<ScreenResult> screens;
  std::vector<LogisticModelResult> fits;
  std::vector<StratumResult> strata;
};

struct AnalysisResult {
  RunConfig config;
  std::uint64_t seed = 0;
  std::vector<std::string> selected_columns;
  IndicatorMatrix indicators;
  PatternTable patterns;
  std::optional<CorrelationMatrix> correlation;
  Eigen::VectorXd spectrum;
  std::optional<EigenSolution> solution;
  std::array<RetentionDecision, 4> decisions;
  Criterion selected_criterion = Criterion::parallel;
  std::size_t q = 0;
  std::optional<ComponentScores> scores;
  std::size_t n_fully_missing = 0;
  std::vector<ComponentMechanism> mechanisms;
  std::vector<SkippedStep> skipped;
  std::vector<std::string> files;
};

/// Step 1 plus pattern tabulation.
AnalysisResult patterns_only(const RunConfig& config, const Dataset& data);

/// Steps 1-8 on an in-memory dataset; nothing is written.
AnalysisResult analyze(const RunConfig& config, const Dataset& data);

/// Reads config.input_path, runs analyze, writes every configured artifact
/// and manifest.json into config.output_dir.
AnalysisResult analyze_and_write(const RunConfig& config);
AnalysisResult patterns_and_write(const RunConfig& config);

/// Writes the artifacts of an existing result; returns the file names.
std::vector<std::string> write_reports(AnalysisResult& result);

std::string manifest_json(const AnalysisResult& result);
/// Rebuilds the configuration recorded in a manifest, seed included.
RunConfig config_from_manifest(const std::string& path);

struct SimulateConfig {
  std::vector<SimCondition> conditions;
  std::size_t reps = 100;
  std::uint64_t seed = 0;
  SimOptions options;
  std::string output_dir = ".";
};

SimReport simulate_and_write(const SimulateConfig& config);
std::string simulation_manifest_json(const SimulateConfig& config);

}  // namespace mispca
