#include "mispca/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "mispca/error.hpp"

namespace mispca {

std::string format_number(double value, int significant) {
  if (std::isnan(value)) return "NA";
  if (std::isinf(value)) return value > 0 ? "Inf" : "-Inf";
  if (value == 0.0) return "0";  // folds -0
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", significant, value);
  return buf;
}

std::string format_fixed(double value, int decimals) {
  if (std::isnan(value)) return "NA";
  if (std::isinf(value)) return value > 0 ? "Inf" : "-Inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  std::string s = buf;
  // "-0.000" reads as a sign where there is none
  if (s.find_first_not_of("-0.") == std::string::npos && s[0] == '-') s.erase(0, 1);
  return s;
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n\r") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string patterns_csv(const PatternTable& table) {
  std::string out = "rank,pattern,n_missing_vars,count,percent\n";
  for (const auto& r : table.rows) {
    out += std::to_string(r.rank) + "," + r.pattern + "," + std::to_string(r.n_missing_vars) + "," +
           std::to_string(r.count) + "," + format_fixed(100.0 * r.percent, 2) + "\n";
  }
  return out;
}

std::string patterns_md(const PatternTable& table, const std::vector<std::string>& indicator_names) {
  std::string out = "| Rank | Pattern | Missing variables | Count | Percent |\n|---:|:---|---:|---:|---:|\n";
  for (const auto& r : table.rows) {
    out += "| " + std::to_string(r.rank) + " | `" + r.pattern + "` | " + std::to_string(r.n_missing_vars) + " | " +
           std::to_string(r.count) + " | " + format_fixed(100.0 * r.percent, 2) + " |\n";
  }
  out += "\nPattern bits, left to right: ";
  for (std::size_t j = 0; j < indicator_names.size(); ++j) out += (j ? ", " : "") + indicator_names[j];
  out += "\n\nObserved patterns: " + std::to_string(table.n_observed_patterns) + " of " +
         std::to_string(table.max_possible) + " possible; rows missing on every indicator: " +
         std::to_string(table.n_fully_missing) + (table.fully_missing_dropped ? " (excluded)" : "") + "\n";
  return out;
}

std::string loadings_csv(const std::vector<std::string>& names, const Eigen::MatrixXd& loadings) {
  if (static_cast<Eigen::Index>(names.size()) != loadings.rows()) {
    throw Error(ErrorCode::dimension_mismatch, "loading rows do not match indicator names");
  }
  std::string out = "indicator";
  for (Eigen::Index c = 0; c < loadings.cols(); ++c) out += ",component" + std::to_string(c + 1);
  out += ",salient\n";
  for (Eigen::Index r = 0; r < loadings.rows(); ++r) {
    out += csv_field(names[static_cast<std::size_t>(r)]);
    std::string salient;
    for (Eigen::Index c = 0; c < loadings.cols(); ++c) {
      out += "," + format_fixed(loadings(r, c), 3);
      if (std::abs(loadings(r, c)) >= kSalientLoading) salient += (salient.empty() ? "" : ";") + std::to_string(c + 1);
    }
    out += "," + salient + "\n";
  }
  return out;
}

std::string retention_csv(const Eigen::VectorXd& observed, const std::array<RetentionDecision, 4>& decisions) {
  std::string out = "position,observed";
  for (const auto& d : decisions) out += std::string(",") + to_string(d.criterion);
  out += "\n";
  for (Eigen::Index i = 0; i < observed.size(); ++i) {
    const auto pos = static_cast<std::size_t>(i);
    out += std::to_string(pos + 1) + "," + format_number(observed(i));
    for (const auto& d : decisions) out += "," + (pos < d.diagnostics.size() ? format_number(d.diagnostics[pos]) : "NA");
    out += "\n";
  }
  return out;
}

std::string screens_header() {
  return "stratum,variable,test,testable,statistic,df,p_value,n_used,n_excluded,n_flag0,mean_flag0,sd_flag0,"
         "n_flag1,mean_flag1,sd_flag1,counts,note\n";
}

void append_screens_rows(std::string& out, const std::vector<ScreenResult>& screens, const std::string& stratum) {
  for (const auto& s : screens) {
    std::string counts;
    for (std::size_t l = 0; l < s.levels.size(); ++l) {
      counts += (l ? ";" : "") + s.levels[l] + ":" + std::to_string(s.counts[l][0]) + "/" + std::to_string(s.counts[l][1]);
    }
    const bool welch = s.test == ScreenTest::welch_t;
    out += csv_field(stratum) + "," + csv_field(s.variable) + "," + to_string(s.test) + "," +
           (s.testable ? "true" : "false") + "," + (s.testable ? format_number(s.statistic) : "NA") + "," +
           (s.testable ? format_number(s.df) : "NA") + "," + (s.testable ? format_number(s.p_value) : "NA") + "," +
           std::to_string(s.n_used) + "," + std::to_string(s.n_excluded) + "," +
           (welch ? std::to_string(s.flag0.n) + "," + format_number(s.flag0.mean) + "," + format_number(s.flag0.sd) + "," +
                        std::to_string(s.flag1.n) + "," + format_number(s.flag1.mean) + "," + format_number(s.flag1.sd)
                  : std::string("NA,NA,NA,NA,NA,NA")) +
           "," + csv_field(counts) + "," + csv_field(s.note) + "\n";
  }
}

std::string screens_csv(const std::vector<ScreenResult>& screens, const std::string& stratum) {
  std::string out = screens_header();
  append_screens_rows(out, screens, stratum);
  return out;
}

std::string logistic_header() {
  return "stratum,model,parameter,coefficient,se,log_likelihood,lr_chi2,df,pseudo_r2,auc,sensitivity_pct,"
         "specificity_pct,correct_pct,separated,converged,n_used,n_excluded,note\n";
}

void append_logistic_rows(std::string& out, const std::vector<LogisticModelResult>& models, const std::string& stratum) {
  for (const auto& m : models) {
    const std::string tail = "," + std::to_string(m.n_used) + "," + std::to_string(m.n_excluded) + "," + csv_field(m.note) + "\n";
    if (!m.fit) {
      out += csv_field(stratum) + "," + csv_field(m.name) + ",,NA,NA,NA,NA,NA,NA,NA,NA,NA,NA,NA,NA" + tail;
      continue;
    }
    const LogisticFit& f = *m.fit;
    const std::string summary = format_fixed(f.log_likelihood, 3) + "," + format_fixed(f.lr_chi2, 3) + "," +
                                std::to_string(f.df) + "," + format_fixed(f.pseudo_r2, 3) + "," +
                                format_fixed(f.auc, 3) + "," + format_fixed(100.0 * f.sensitivity, 2) + "," +
                                format_fixed(100.0 * f.specificity, 2) + "," + format_fixed(100.0 * f.correct_pct, 2) +
                                "," + (f.separated ? "true" : "false") + "," + (f.converged ? "true" : "false");
    for (std::size_t p = 0; p < f.names.size(); ++p) {
      std::string se = "--";
      if (f.aliased[p]) {
        se = "aliased";
      } else if (f.standard_errors) {
        se = format_fixed((*f.standard_errors)[p], 3);
      }
      out += csv_field(stratum) + "," + csv_field(m.name) + "," + csv_field(f.names[p]) + "," +
             format_fixed(f.coefficients[p], 3) + "," + se + "," + summary + tail;
    }
  }
}

std::string logistic_csv(const std::vector<LogisticModelResult>& models, const std::string& stratum) {
  std::string out = logistic_header();
  append_logistic_rows(out, models, stratum);
  return out;
}

std::string grid_csv(const SimReport& report) {
  std::string out = "n_components,items_per_component,n,p_miss,corr_kind,method,reps,failed";
  for (Criterion c : kAllCriteria) out += std::string(",") + to_string(c) + "_converged," + to_string(c) + "_proportion";
  out += "\n";
  for (const auto& cell : report.cells) {
    const auto& k = cell.condition;
    out += std::to_string(k.n_components) + "," + std::to_string(k.items_per_component) + "," + std::to_string(k.n) +
           "," + format_fixed(k.p_miss, 2) + "," + to_string(k.corr_kind) + "," + to_string(k.method) + "," +
           std::to_string(cell.replications_run) + "," + std::to_string(cell.replications_failed);
    for (const auto& t : cell.tallies) {
      out += "," + std::to_string(t.converged) + "," + (t.converged ? format_fixed(t.proportion(), 4) : "NA");
    }
    out += "\n";
  }
  return out;
}

std::string aggregate_csv(const SimReport& report) {
  std::string out = "criterion,mean_proportion,cells_scored,cells_at_least_95pct\n";
  for (std::size_t c = 0; c < kAllCriteria.size(); ++c) {
    out += std::string(to_string(kAllCriteria[c])) + "," + format_fixed(report.aggregate[c], 4) + "," +
           std::to_string(report.cells_scored[c]) + "," + std::to_string(report.cells_success[c]) + "\n";
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::invalid_argument, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error(ErrorCode::invalid_argument, "write failed for '" + path.string() + "'");
}

}  // namespace mispca
