// Command-line front end: analyze, patterns, simulate, guidance.
#include <cstdio>
#include <iostream>
#include <regex>
#include <string>

#include <CLI11.hpp>

#include "mispca/pipeline.hpp"
#include "mispca/report.hpp"

using namespace mispca;

namespace {

struct AnalyzeFlags {
  RunConfig config;
  std::string manifest;
  std::string delimiter = ",";
  std::string correlation = "pearson";
  std::string method = "pca";
  std::uint64_t seed = 0;
  std::string strata;
};

void add_run_options(CLI::App* cmd, AnalyzeFlags& f, bool full) {
  cmd->add_option("input", f.config.input_path, "Delimited text file with a header row");
  cmd->add_option("--out,-o", f.config.output_dir, "Output directory")->capture_default_str();
  cmd->add_option("--columns", f.config.columns, "Columns to build indicators from (default: all)")->delimiter(',');
  cmd->add_option("--sentinels", f.config.missing_sentinels, "Cell texts read as missing")
      ->delimiter(',')
      ->capture_default_str();
  cmd->add_option("--delimiter", f.delimiter, "Field delimiter: ',' or 'tab'")->capture_default_str();
  cmd->add_option("--formats", f.config.output_formats, "Subset of json,csv,md")->delimiter(',')->capture_default_str();
  cmd->add_flag("--drop-fully-missing", f.config.drop_fully_missing_patterns,
                "Leave rows missing on every indicator out of the pattern table");
  if (!full) return;
  cmd->add_option("--manifest", f.manifest, "Rerun the configuration recorded in a manifest.json");
  cmd->add_option("--corr", f.correlation, "pearson or tetrachoric")->capture_default_str();
  cmd->add_option("--method", f.method, "pca or paf")->capture_default_str();
  cmd->add_option("--criterion", f.config.criterion, "kaiser, ekc, parallel, profile_likelihood or auto")
      ->capture_default_str();
  cmd->add_option("--ipc", f.config.items_per_component, "Items per component (for --criterion auto)");
  cmd->add_option("--comps", f.config.expected_components, "Expected components (for --criterion auto)");
  cmd->add_option("--cutoff", f.config.cutoff, "Score dichotomization cutoff")->capture_default_str();
  cmd->add_option("--pa-reps", f.config.pa_reps, "Parallel-analysis replications")->capture_default_str();
  cmd->add_option("--percentile", f.config.percentile, "Parallel-analysis percentile")->capture_default_str();
  cmd->add_option("--seed", f.seed, "Random seed (generated when omitted)");
  cmd->add_option("--strata", f.strata, "Stratifying column for step 8");
  cmd->add_option("--covariates", f.config.covariate_columns, "Covariate columns for steps 6-7")->delimiter(',');
  cmd->add_option("--threads", f.config.threads, "Worker threads (0 = all cores)")->capture_default_str();
}

RunConfig finish(CLI::App* cmd, AnalyzeFlags& f) {
  if (!f.manifest.empty()) {
    RunConfig c = config_from_manifest(f.manifest);
    c.threads = f.config.threads;
    if (cmd->count("--out")) c.output_dir = f.config.output_dir;
    return c;
  }
  if (f.config.input_path.empty()) throw CLI::ValidationError("input", "an input file is required");
  RunConfig c = f.config;
  if (f.delimiter == "tab" || f.delimiter == "\\t") {
    c.delimiter = '\t';
  } else if (f.delimiter.size() == 1) {
    c.delimiter = f.delimiter[0];
  } else {
    throw CLI::ValidationError("--delimiter", "expected a single character or 'tab'");
  }
  if (cmd->get_option_no_throw("--corr")) {
    c.correlation_kind = parse_correlation_kind(f.correlation);
    c.extraction_method = parse_extraction_method(f.method);
    if (cmd->count("--seed")) c.seed = f.seed;
    if (!f.strata.empty()) c.strata_column = f.strata;
    if (c.criterion != "auto") c.criterion = to_string(parse_criterion(c.criterion));
  }
  return c;
}

void print_summary(const AnalysisResult& r) {
  std::printf("seed %llu\n", static_cast<unsigned long long>(r.seed));
  std::printf("indicators %zu (dropped %zu), patterns %zu\n", r.indicators.cols(), r.indicators.dropped().size(),
              r.patterns.n_observed_patterns);
  if (r.correlation) {
    std::printf("retained:");
    for (const auto& d : r.decisions) {
      if (d.converged) {
        std::printf(" %s=%zu", to_string(d.criterion), d.k_retained);
      } else {
        std::printf(" %s=NA", to_string(d.criterion));
      }
    }
    std::printf("\nselected %s -> q = %zu\n", to_string(r.selected_criterion), r.q);
  }
  for (const auto& s : r.skipped) std::printf("skipped %s: %s\n", s.step.c_str(), s.reason.c_str());
  std::printf("wrote %zu files to %s\n", r.files.size(), r.config.output_dir.c_str());
}

// "3x5" -> (3 components, 5 items)
std::pair<std::size_t, std::size_t> parse_cell(const std::string& text) {
  static const std::regex pattern(R"((\d+)x(\d+))");
  std::smatch m;
  if (!std::regex_match(text, m, pattern)) throw CLI::ValidationError("--cell", "expected COMPONENTSxITEMS, e.g. 3x5");
  return {std::stoul(m[1]), std::stoul(m[2])};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Missing-data pattern components: indicators, retention, mechanism screens, simulation"};
  app.set_version_flag("--version", MISPCA_VERSION);
  app.require_subcommand(1);

  AnalyzeFlags analyze_flags;
  auto* analyze_cmd = app.add_subcommand("analyze", "Run steps 1-8 on a delimited file");
  add_run_options(analyze_cmd, analyze_flags, true);

  AnalyzeFlags pattern_flags;
  auto* patterns_cmd = app.add_subcommand("patterns", "Build indicators and tabulate missing-data patterns");
  add_run_options(patterns_cmd, pattern_flags, false);

  std::string cell, sim_corr = "pearson", sim_method = "pca", sim_out = ".";
  std::size_t sim_n = 1000, sim_reps = 100;
  double sim_pmiss = 0.25;
  std::uint64_t sim_seed = 1;
  bool full = false;
  SimOptions sim_options;
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo recovery study for the four retention criteria");
  sim_cmd->add_option("--cell", cell, "Single cell as COMPONENTSxITEMS, e.g. 1x5");
  sim_cmd->add_option("--n", sim_n, "Sample size for --cell")->capture_default_str();
  sim_cmd->add_option("--pmiss", sim_pmiss, "Missingness probability for --cell")->capture_default_str();
  sim_cmd->add_flag("--full", full, "Run the 108-cell factorial");
  sim_cmd->add_option("--reps", sim_reps, "Replications per cell")->capture_default_str();
  sim_cmd->add_option("--seed", sim_seed, "Random seed")->capture_default_str();
  sim_cmd->add_option("--corr", sim_corr, "pearson or tetrachoric")->capture_default_str();
  sim_cmd->add_option("--method", sim_method, "pca or paf")->capture_default_str();
  sim_cmd->add_option("--pa-reps", sim_options.pa_reps, "Parallel-analysis replications")->capture_default_str();
  sim_cmd->add_option("--threads", sim_options.threads, "Worker threads (0 = all cores)")->capture_default_str();
  sim_cmd->add_option("--out,-o", sim_out, "Output directory")->capture_default_str();
  sim_cmd->get_option("--full")->excludes("--cell");

  std::size_t g_n = 0, g_ipc = 0, g_comps = 0;
  auto* guidance_cmd = app.add_subcommand("guidance", "Recommend a retention criterion for a design");
  guidance_cmd->add_option("--n", g_n, "Sample size")->required();
  guidance_cmd->add_option("--ipc", g_ipc, "Items per component")->required();
  guidance_cmd->add_option("--comps", g_comps, "Expected number of components")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (analyze_cmd->parsed()) {
      print_summary(analyze_and_write(finish(analyze_cmd, analyze_flags)));
    } else if (patterns_cmd->parsed()) {
      print_summary(patterns_and_write(finish(patterns_cmd, pattern_flags)));
    } else if (sim_cmd->parsed()) {
      SimulateConfig config;
      const auto kind = parse_correlation_kind(sim_corr);
      const auto method = parse_extraction_method(sim_method);
      if (full) {
        config.conditions = factorial_grid(kind, method);
      } else {
        if (cell.empty()) throw CLI::ValidationError("simulate", "give --cell or --full");
        const auto [components, items] = parse_cell(cell);
        SimCondition c{components, items, sim_n, sim_pmiss, kind, method};
        c.validate();
        config.conditions = {c};
      }
      config.reps = sim_reps;
      config.seed = sim_seed;
      config.options = sim_options;
      config.output_dir = sim_out;
      const SimReport report = simulate_and_write(config);
      std::cout << aggregate_csv(report);
    } else if (guidance_cmd->parsed()) {
      std::cout << to_string(guidance(g_n, g_ipc, g_comps)) << "\n";
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const IngestError& e) {
    std::fprintf(stderr, "error: ingest: %s", e.what());
    if (e.row()) std::fprintf(stderr, " (row %zu, column %zu)", e.row(), e.column());
    std::fprintf(stderr, "\n");
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
