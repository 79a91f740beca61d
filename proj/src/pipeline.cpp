#include "mispca/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include <Eigen/Core>
#include <boost/version.hpp>
#include <json.hpp>

#include "mispca/ingest.hpp"
#include "mispca/report.hpp"

namespace mispca {

using Json = nlohmann::ordered_json;

namespace {

const std::set<std::string> kFormats{"json", "csv", "md"};

template <typename F>
auto step(const std::string& label, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const StepError&) {
    throw;
  } catch (const Error& e) {
    throw StepError(label, e);
  }
}

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json vector_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v(i)));
  return out;
}

Json vector_json(const std::vector<double>& v) {
  Json out = Json::array();
  for (double x : v) out.push_back(number(x));
  return out;
}

}  // namespace

void RunConfig::validate() const {
  if (criterion == "auto") {
    if (!items_per_component || !expected_components) {
      throw Error(ErrorCode::invalid_argument,
                  "criterion 'auto' needs the items-per-component and expected-components hints");
    }
  } else {
    parse_criterion(criterion);
  }
  if (pa_reps < 1) throw Error(ErrorCode::invalid_argument, "pa_reps must be at least 1");
  if (!(percentile > 0.0 && percentile < 1.0)) throw Error(ErrorCode::invalid_argument, "percentile must lie in (0, 1)");
  if (!std::isfinite(cutoff)) throw Error(ErrorCode::invalid_argument, "cutoff must be finite");
  for (const auto& f : output_formats) {
    if (!kFormats.count(f)) throw Error(ErrorCode::invalid_argument, "unknown output format '" + f + "'");
  }
}

bool RunConfig::wants(const std::string& format) const {
  return std::find(output_formats.begin(), output_formats.end(), format) != output_formats.end();
}

namespace {

std::uint64_t fresh_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

std::vector<std::string> selection(const RunConfig& config, const Dataset& data) {
  if (!config.columns.empty()) return config.columns;
  return data.column_names();
}

void step1(AnalysisResult& r, const Dataset& data) {
  step("step 1 (indicators)", [&] {
    r.selected_columns = selection(r.config, data);
    r.indicators = build_indicators(data, r.selected_columns);
  });
  r.patterns = step("step 1 (patterns)", [&] {
    PatternOptions options;
    options.drop_fully_missing = r.config.drop_fully_missing_patterns;
    return tabulate_patterns(r.indicators, options);
  });
}

AnalysisResult start(const RunConfig& config) {
  step("configuration", [&] { config.validate(); });
  AnalysisResult r;
  r.config = config;
  r.seed = config.seed ? *config.seed : fresh_seed();
  r.config.seed = r.seed;
  return r;
}

Dataset augmented_dataset(const Dataset& data, const IndicatorMatrix& ind) {
  Dataset out = data;
  for (std::size_t j = 0; j < ind.cols(); ++j) {
    std::vector<double> v(ind.rows());
    for (std::size_t i = 0; i < ind.rows(); ++i) v[i] = ind(i, j);
    if (out.find(ind.names()[j])) {
      throw Error(ErrorCode::invalid_argument, "indicator name '" + ind.names()[j] + "' collides with a data column");
    }
    out.add_column(Column::numeric(ind.names()[j], std::move(v)));
  }
  return out;
}

void mechanism_steps(AnalysisResult& r, const Dataset& data) {
  const Dataset aug = step("step 6 (augment)", [&] { return augmented_dataset(data, r.indicators); });
  RowMask include(data.rows(), true);
  for (std::size_t i = 0; i < data.rows(); ++i) include[i] = !r.scores->fully_missing[i];
  r.n_fully_missing = static_cast<std::size_t>(std::count(include.begin(), include.end(), false));

  std::vector<std::string> screen_vars;
  if (!r.config.covariate_columns.empty()) {
    screen_vars = r.config.covariate_columns;
  } else {
    for (const auto& name : data.column_names()) {
      if (!r.config.strata_column || name != *r.config.strata_column) screen_vars.push_back(name);
    }
  }
  for (const auto& name : r.indicators.names()) screen_vars.push_back(name);

  const std::vector<std::string> predictors =
      r.config.covariate_columns.empty() ? r.indicators.names() : r.config.covariate_columns;
  MechanismPlan plan{screen_vars, simple_and_joint_models(predictors)};

  for (std::size_t c = 0; c < r.q; ++c) {
    ComponentMechanism m;
    m.component = c + 1;
    Flag flag(data.rows());
    for (std::size_t i = 0; i < data.rows(); ++i) {
      flag[i] = r.scores->dichotomized(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
      if (include[i]) (flag[i] ? m.n_flag1 : m.n_flag0) += 1;
    }
    const std::string tag = "component " + std::to_string(c + 1);
    if (m.n_flag0 == 0 || m.n_flag1 == 0) {
      r.skipped.push_back({"step 6-7 " + tag, "dichotomized score has a single class"});
      r.mechanisms.push_back(std::move(m));
      continue;
    }
    m.screens = step("step 6 (screens, " + tag + ")", [&] { return screen(aug, flag, plan.screen_variables, include); });
    step("step 7 (logistic, " + tag + ")", [&] {
      for (const auto& spec : plan.models) m.fits.push_back(fit_model(aug, flag, spec, include));
    });
    if (r.config.strata_column) {
      m.strata = step("step 8 (strata, " + tag + ")",
                      [&] { return stratified_rerun(aug, flag, *r.config.strata_column, plan, include); });
    }
    r.mechanisms.push_back(std::move(m));
  }
  if (!r.config.strata_column) r.skipped.push_back({"step 8", "no stratifying column configured"});
}

}  // namespace

AnalysisResult patterns_only(const RunConfig& config, const Dataset& data) {
  AnalysisResult r = start(config);
  step1(r, data);
  r.skipped.push_back({"steps 2-8", "patterns-only run"});
  return r;
}

AnalysisResult analyze(const RunConfig& config, const Dataset& data) {
  AnalysisResult r = start(config);
  step1(r, data);

  r.correlation = step("step 2 (correlation)", [&] {
    return repair_pd(r.config.correlation_kind == CorrelationKind::pearson ? pearson(r.indicators)
                                                                           : tetrachoric(r.indicators));
  });

  const Spectrum spectrum = spectrum_for(r.config.extraction_method);
  r.spectrum = step("step 3 (spectrum)", [&] { return criterion_spectrum(r.correlation->values, spectrum); });
  r.decisions = step("step 3 (retention)", [&] {
    ParallelOptions pa;
    pa.reps = r.config.pa_reps;
    pa.percentile = r.config.percentile;
    pa.seed = r.seed;
    pa.threads = r.config.threads;
    pa.spectrum = spectrum;
    const std::span<const double> eig(r.spectrum.data(), static_cast<std::size_t>(r.spectrum.size()));
    return evaluate_criteria(r.indicators, eig, pa);
  });
  r.selected_criterion = r.config.criterion == "auto"
                             ? guidance(r.indicators.rows(), *r.config.items_per_component, *r.config.expected_components)
                             : parse_criterion(r.config.criterion);
  const auto& decision = r.decisions[static_cast<std::size_t>(r.selected_criterion)];
  if (!decision.converged) {
    r.skipped.push_back({"steps 4-8", std::string("criterion ") + to_string(r.selected_criterion) + " did not converge"});
    return r;
  }
  r.q = decision.k_retained;
  if (r.q == 0) {
    r.skipped.push_back({"steps 4-8", std::string("criterion ") + to_string(r.selected_criterion) + " retained 0 components"});
    return r;
  }

  const std::size_t k = r.indicators.cols();
  if (r.config.extraction_method == ExtractionMethod::paf && r.q >= k) {
    r.skipped.push_back({"steps 4-8", "principal-axis factoring needs fewer factors than indicators"});
    return r;
  }
  r.solution = step("step 4 (extraction)", [&] {
    return r.config.extraction_method == ExtractionMethod::pca ? pca(*r.correlation) : paf(*r.correlation, r.q);
  });
  if (!r.solution->converged) {
    r.skipped.push_back({"steps 5-8", "principal-axis factoring did not converge"});
    return r;
  }
  r.scores = step("step 5 (scores)", [&] { return scores(r.indicators, *r.solution, r.q, r.config.cutoff); });
  mechanism_steps(r, data);
  return r;
}

namespace {

Json config_json(const RunConfig& c) {
  Json j;
  j["input_path"] = c.input_path;
  j["missing_sentinels"] = c.missing_sentinels;
  j["delimiter"] = std::string(1, c.delimiter);
  j["columns"] = c.columns;
  j["correlation_kind"] = to_string(c.correlation_kind);
  j["extraction_method"] = to_string(c.extraction_method);
  j["criterion"] = c.criterion;
  j["items_per_component"] = c.items_per_component ? Json(*c.items_per_component) : Json(nullptr);
  j["expected_components"] = c.expected_components ? Json(*c.expected_components) : Json(nullptr);
  j["cutoff"] = c.cutoff;
  j["pa_reps"] = c.pa_reps;
  j["percentile"] = c.percentile;
  j["seed"] = c.seed ? Json(*c.seed) : Json(nullptr);
  j["strata_column"] = c.strata_column ? Json(*c.strata_column) : Json(nullptr);
  j["covariate_columns"] = c.covariate_columns;
  j["drop_fully_missing_patterns"] = c.drop_fully_missing_patterns;
  j["output_dir"] = c.output_dir;
  j["output_formats"] = c.output_formats;
  return j;
}

Json versions_json() {
  Json j;
  j["mispca"] = MISPCA_VERSION;
  j["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
               std::to_string(EIGEN_MINOR_VERSION);
  j["boost"] = std::to_string(BOOST_VERSION / 100000) + "." + std::to_string(BOOST_VERSION / 100 % 1000) + "." +
               std::to_string(BOOST_VERSION % 100);
  return j;
}

Json decision_json(const RetentionDecision& d) {
  Json j;
  j["criterion"] = to_string(d.criterion);
  j["converged"] = d.converged;
  j["k_retained"] = d.converged ? Json(d.k_retained) : Json(nullptr);
  j["diagnostics"] = vector_json(d.diagnostics);
  if (d.criterion == Criterion::parallel) {
    j["replications"] = d.replications;
    j["dropped_replications"] = d.dropped_replications;
  }
  return j;
}

Json screen_json(const ScreenResult& s) {
  Json j;
  j["variable"] = s.variable;
  j["test"] = to_string(s.test);
  j["testable"] = s.testable;
  j["statistic"] = s.testable ? number(s.statistic) : Json(nullptr);
  j["df"] = s.testable ? number(s.df) : Json(nullptr);
  j["p_value"] = s.testable ? number(s.p_value) : Json(nullptr);
  j["n_used"] = s.n_used;
  j["n_excluded"] = s.n_excluded;
  if (s.test == ScreenTest::welch_t) {
    for (const auto& [key, g] : {std::pair{"flag0", s.flag0}, std::pair{"flag1", s.flag1}}) {
      j[key] = {{"n", g.n}, {"mean", number(g.mean)}, {"sd", number(g.sd)}};
    }
  } else {
    Json counts = Json::object();
    for (std::size_t l = 0; l < s.levels.size(); ++l) counts[s.levels[l]] = {s.counts[l][0], s.counts[l][1]};
    j["counts"] = counts;
  }
  if (!s.note.empty()) j["note"] = s.note;
  return j;
}

Json fit_json(const LogisticModelResult& m) {
  Json j;
  j["model"] = m.name;
  j["predictors"] = m.predictors;
  j["n_used"] = m.n_used;
  j["n_excluded"] = m.n_excluded;
  if (!m.fit) {
    j["note"] = m.note;
    return j;
  }
  const auto& f = *m.fit;
  Json params = Json::array();
  for (std::size_t p = 0; p < f.names.size(); ++p) {
    params.push_back({{"name", f.names[p]},
                      {"coefficient", number(f.coefficients[p])},
                      {"se", f.standard_errors ? number((*f.standard_errors)[p]) : Json(nullptr)},
                      {"aliased", static_cast<bool>(f.aliased[p])}});
  }
  j["parameters"] = params;
  j["log_likelihood"] = number(f.log_likelihood);
  j["null_log_likelihood"] = number(f.null_log_likelihood);
  j["lr_chi2"] = number(f.lr_chi2);
  j["df"] = f.df;
  j["pseudo_r2"] = number(f.pseudo_r2);
  j["auc"] = number(f.auc);
  j["sensitivity"] = number(f.sensitivity);
  j["specificity"] = number(f.specificity);
  j["correct_pct"] = number(f.correct_pct);
  j["separated"] = f.separated;
  j["converged"] = f.converged;
  j["iterations"] = f.iterations;
  return j;
}

Json mechanism_json(const ComponentMechanism& m) {
  Json j;
  j["component"] = m.component;
  j["n_flag0"] = m.n_flag0;
  j["n_flag1"] = m.n_flag1;
  j["screens"] = Json::array();
  for (const auto& s : m.screens) j["screens"].push_back(screen_json(s));
  j["fits"] = Json::array();
  for (const auto& f : m.fits) j["fits"].push_back(fit_json(f));
  if (!m.strata.empty()) {
    j["strata"] = Json::array();
    for (const auto& s : m.strata) {
      Json sj;
      sj["level"] = s.level;
      sj["n"] = s.n;
      sj["testable"] = s.testable;
      if (!s.note.empty()) sj["note"] = s.note;
      sj["screens"] = Json::array();
      for (const auto& x : s.screens) sj["screens"].push_back(screen_json(x));
      sj["fits"] = Json::array();
      for (const auto& f : s.fits) sj["fits"].push_back(fit_json(f));
      j["strata"].push_back(sj);
    }
  }
  return j;
}

Json separation_json(const AnalysisResult& r) {
  Json out = Json::array();
  auto add = [&](std::size_t component, const std::string& stratum, const std::vector<LogisticModelResult>& fits) {
    for (const auto& f : fits) {
      if (f.fit && f.fit->separated) {
        out.push_back({{"component", component}, {"stratum", stratum}, {"model", f.name}});
      }
    }
  };
  for (const auto& m : r.mechanisms) {
    add(m.component, "", m.fits);
    for (const auto& s : m.strata) add(m.component, s.level, s.fits);
  }
  return out;
}

Json report_json(const AnalysisResult& r) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["seed"] = r.seed;
  j["n_rows"] = r.indicators.rows();
  j["indicators"] = r.indicators.names();
  j["marginals"] = vector_json(r.indicators.marginals());
  Json patterns = Json::array();
  for (const auto& p : r.patterns.rows) {
    patterns.push_back({{"rank", p.rank}, {"pattern", p.pattern}, {"n_missing_vars", p.n_missing_vars},
                        {"count", p.count}, {"percent", number(100.0 * p.percent)}});
  }
  j["patterns"] = {{"rows", patterns},
                   {"n_observed_patterns", r.patterns.n_observed_patterns},
                   {"max_possible", r.patterns.max_possible},
                   {"n_fully_missing", r.patterns.n_fully_missing},
                   {"percent_base", r.patterns.percent_base}};
  if (r.correlation) {
    j["correlation"] = {{"kind", to_string(r.correlation->kind)},
                        {"pd_repaired", r.correlation->pd_repaired},
                        {"min_eigenvalue_before_repair", number(r.correlation->min_eigenvalue_before_repair)}};
    j["spectrum"] = vector_json(r.spectrum);
    j["retention"] = Json::array();
    for (const auto& d : r.decisions) j["retention"].push_back(decision_json(d));
    j["selected_criterion"] = to_string(r.selected_criterion);
    j["q"] = r.q;
  }
  if (r.solution) {
    j["extraction"] = {{"method", to_string(r.solution->method)},
                       {"converged", r.solution->converged},
                       {"iterations", r.solution->iterations},
                       {"heywood", r.solution->heywood},
                       {"smc_fallback", r.solution->smc_fallback}};
  }
  if (r.scores) {
    Json flipped = Json::array();
    for (bool f : r.scores->flipped) flipped.push_back(f);
    j["scores"] = {{"cutoff", r.scores->cutoff}, {"flipped", flipped}, {"n_fully_missing", r.n_fully_missing}};
  }
  j["mechanism"] = Json::array();
  for (const auto& m : r.mechanisms) j["mechanism"].push_back(mechanism_json(m));
  return j;
}

}  // namespace

std::string manifest_json(const AnalysisResult& r) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "analysis";
  j["seed"] = r.seed;
  j["config"] = config_json(r.config);
  j["versions"] = versions_json();
  Json dropped = Json::array();
  for (const auto& d : r.indicators.dropped()) dropped.push_back({{"name", d.name}, {"reason", to_string(d.reason)}});
  j["dropped_columns"] = dropped;
  Json skipped = Json::array();
  for (const auto& s : r.skipped) skipped.push_back({{"step", s.step}, {"reason", s.reason}});
  j["skipped_steps"] = skipped;
  j["pd_repaired"] = r.correlation ? Json(r.correlation->pd_repaired) : Json(nullptr);
  j["separation"] = separation_json(r);
  j["files"] = r.files;
  return j.dump(2) + "\n";
}

std::vector<std::string> write_reports(AnalysisResult& r) {
  const std::filesystem::path dir(r.config.output_dir);
  std::filesystem::create_directories(dir);
  std::vector<std::string> files;
  auto emit = [&](const std::string& name, const std::string& text) {
    write_text(dir / name, text);
    files.push_back(name);
  };
  if (r.config.wants("csv")) emit("patterns.csv", patterns_csv(r.patterns));
  if (r.config.wants("md")) emit("patterns.md", patterns_md(r.patterns, r.indicators.names()));
  if (r.config.wants("csv") && r.correlation) {
    emit("retention.csv", retention_csv(r.spectrum, r.decisions));
    if (r.solution && r.q > 0) emit("loadings.csv", loadings_csv(r.indicators.names(), r.scores ? r.scores->loadings : r.solution->loadings.leftCols(static_cast<Eigen::Index>(r.q))));
    if (!r.mechanisms.empty()) {
      std::string screens = "component," + screens_header();
      std::string logistic = "component," + logistic_header();
      for (const auto& m : r.mechanisms) {
        const std::string prefix = std::to_string(m.component) + ",";
        auto prefixed = [&](std::string& out, auto append) {
          std::string rows;
          append(rows);
          std::size_t start = 0;
          while (start < rows.size()) {
            const auto end = rows.find('\n', start);
            out += prefix + rows.substr(start, end - start + 1);
            start = end + 1;
          }
        };
        prefixed(screens, [&](std::string& s) {
          append_screens_rows(s, m.screens, "");
          for (const auto& st : m.strata) append_screens_rows(s, st.screens, st.level);
        });
        prefixed(logistic, [&](std::string& s) {
          append_logistic_rows(s, m.fits, "");
          for (const auto& st : m.strata) append_logistic_rows(s, st.fits, st.level);
        });
      }
      emit("screens.csv", screens);
      emit("logistic.csv", logistic);
    }
  }
  if (r.config.wants("json")) emit("report.json", report_json(r).dump(2) + "\n");
  files.push_back("manifest.json");
  r.files = files;
  write_text(dir / "manifest.json", manifest_json(r));
  return files;
}

namespace {

Dataset load(const RunConfig& config) {
  // IngestError already carries row/column context; it is not re-labelled.
  IngestOptions options;
  options.sentinels = config.missing_sentinels;
  options.delimiter = config.delimiter;
  return ingest(config.input_path, options);
}

}  // namespace

AnalysisResult analyze_and_write(const RunConfig& config) {
  step("configuration", [&] { config.validate(); });
  AnalysisResult r = analyze(config, load(config));
  write_reports(r);
  return r;
}

AnalysisResult patterns_and_write(const RunConfig& config) {
  step("configuration", [&] { config.validate(); });
  AnalysisResult r = patterns_only(config, load(config));
  write_reports(r);
  return r;
}

RunConfig config_from_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::invalid_argument, "cannot open manifest '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::invalid_argument, "malformed manifest: " + std::string(e.what()));
  }
  if (j.value("schema_version", 0) != kSchemaVersion || j.value("kind", "") != "analysis") {
    throw Error(ErrorCode::invalid_argument, "manifest is not an analysis manifest of schema version " +
                                                 std::to_string(kSchemaVersion));
  }
  try {
    const Json& c = j.at("config");
    RunConfig config;
    config.input_path = c.at("input_path").get<std::string>();
    config.missing_sentinels = c.at("missing_sentinels").get<std::vector<std::string>>();
    const auto delimiter = c.at("delimiter").get<std::string>();
    if (delimiter.size() != 1) throw Error(ErrorCode::invalid_argument, "manifest delimiter must be one character");
    config.delimiter = delimiter[0];
    config.columns = c.at("columns").get<std::vector<std::string>>();
    config.correlation_kind = parse_correlation_kind(c.at("correlation_kind").get<std::string>());
    config.extraction_method = parse_extraction_method(c.at("extraction_method").get<std::string>());
    config.criterion = c.at("criterion").get<std::string>();
    if (!c.at("items_per_component").is_null()) config.items_per_component = c["items_per_component"].get<std::size_t>();
    if (!c.at("expected_components").is_null()) config.expected_components = c["expected_components"].get<std::size_t>();
    config.cutoff = c.at("cutoff").get<double>();
    config.pa_reps = c.at("pa_reps").get<std::size_t>();
    config.percentile = c.at("percentile").get<double>();
    config.seed = j.at("seed").get<std::uint64_t>();
    if (!c.at("strata_column").is_null()) config.strata_column = c["strata_column"].get<std::string>();
    config.covariate_columns = c.at("covariate_columns").get<std::vector<std::string>>();
    config.drop_fully_missing_patterns = c.at("drop_fully_missing_patterns").get<bool>();
    config.output_dir = c.at("output_dir").get<std::string>();
    config.output_formats = c.at("output_formats").get<std::vector<std::string>>();
    return config;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::invalid_argument, "manifest config is incomplete: " + std::string(e.what()));
  }
}

std::string simulation_manifest_json(const SimulateConfig& config) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "simulation";
  j["seed"] = config.seed;
  j["reps"] = config.reps;
  j["pa_reps"] = config.options.pa_reps;
  j["percentile"] = config.options.percentile;
  Json cells = Json::array();
  for (const auto& c : config.conditions) cells.push_back(c.label());
  j["conditions"] = cells;
  j["versions"] = versions_json();
  j["files"] = {"grid.csv", "aggregate.csv", "manifest.json"};
  return j.dump(2) + "\n";
}

SimReport simulate_and_write(const SimulateConfig& config) {
  const SimReport report = step("simulate", [&] { return run_grid(config.conditions, config.reps, config.seed, config.options); });
  const std::filesystem::path dir(config.output_dir);
  std::filesystem::create_directories(dir);
  write_text(dir / "grid.csv", grid_csv(report));
  write_text(dir / "aggregate.csv", aggregate_csv(report));
  write_text(dir / "manifest.json", simulation_manifest_json(config));
  return report;
}

}  // namespace mispca
