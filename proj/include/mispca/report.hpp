#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mispca/indicators.hpp"
#include "mispca/mechanism.hpp"
#include "mispca/retention.hpp"
#include "mispca/simulation.hpp"

namespace mispca {

inline constexpr double kSalientLoading = 0.55;

/// Locale-independent number text; NaN prints as "NA".
std::string format_number(double value, int significant = 10);
std::string format_fixed(double value, int decimals);

/// Quotes a CSV field when it holds a comma, quote or newline.
std::string csv_field(const std::string& text);

std::string patterns_csv(const PatternTable& table);
std::string patterns_md(const PatternTable& table, const std::vector<std::string>& indicator_names);

/// One row per indicator, one column per retained component, three decimals.
std::string loadings_csv(const std::vector<std::string>& names, const Eigen::MatrixXd& loadings);

/// Scree-style table: position, observed eigenvalue, each criterion's
/// reference value (profile likelihood: log-likelihood at q = position).
std::string retention_csv(const Eigen::VectorXd& observed, const std::array<RetentionDecision, 4>& decisions);

/// `stratum` is empty for the whole-sample run.
std::string screens_csv(const std::vector<ScreenResult>& screens, const std::string& stratum = {});
void append_screens_rows(std::string& out, const std::vector<ScreenResult>& screens, const std::string& stratum);
std::string screens_header();

/// One row per model parameter in a fit-table layout; suppressed standard
/// errors print as "--".
std::string logistic_csv(const std::vector<LogisticModelResult>& models, const std::string& stratum = {});
void append_logistic_rows(std::string& out, const std::vector<LogisticModelResult>& models, const std::string& stratum);
std::string logistic_header();

std::string grid_csv(const SimReport& report);
std::string aggregate_csv(const SimReport& report);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace mispca
