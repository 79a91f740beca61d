// Acceptance suite: one PASS/FAIL line per criterion.
//
// Criteria 1-8 run once with the requested thread count and write their
// report files; the whole set is then repeated single-threaded and every
// report file is compared byte for byte (criterion 9).
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "mispca/correlation.hpp"
#include "mispca/extraction.hpp"
#include "mispca/mechanism.hpp"
#include "mispca/normal.hpp"
#include "mispca/pipeline.hpp"
#include "mispca/report.hpp"
#include "mispca/retention.hpp"
#include "mispca/simulation.hpp"
#include "support.hpp"

using namespace mispca;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 7;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Context {
  fs::path dir;
  unsigned threads = 1;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

SimReport grid(const Context& ctx, const std::string& name, const std::vector<SimCondition>& cells, std::size_t reps) {
  SimulateConfig config;
  config.conditions = cells;
  config.reps = reps;
  config.seed = kSeed;
  config.options.threads = ctx.threads;
  config.output_dir = (ctx.dir / name).string();
  return simulate_and_write(config);
}

constexpr std::size_t kKaiser = 0, kEkc = 1, kParallel = 2, kProfile = 3;

Outcome ac1(const Context& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = grid(ctx, "ac1", {{1, 5, 1000, 0.25}}, 200);
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = secs < 60.0;
  for (std::size_t c = 0; c < 4; ++c) {
    const double p = r.cells[0].tallies[c].proportion();
    o.pass = o.pass && r.cells[0].tallies[c].converged > 0 && p >= 0.95;
    o.detail += std::string(to_string(kAllCriteria[c])) + "=" + fmt("%.3f", p) + " ";
  }
  o.detail += "(need >= 0.950 each; " + fmt("%.1f", secs) + "s, target < 60s)";
  return o;
}

Outcome ac2(const Context& ctx) {
  std::vector<SimCondition> cells;
  for (std::size_t comps : {3, 5, 10})
    for (std::size_t items : {3, 10}) cells.push_back({comps, items, 1000, 0.50});
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = grid(ctx, "ac2", cells, 100);
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = secs < 600.0;
  for (const auto& cell : r.cells) {
    const double p = cell.tallies[kParallel].proportion();
    o.pass = o.pass && cell.tallies[kParallel].converged > 0 && p >= 0.90;
    o.detail += std::to_string(cell.condition.n_components) + "x" + std::to_string(cell.condition.items_per_component) +
                "=" + fmt("%.2f", p) + " ";
  }
  o.detail += "(parallel, need >= 0.90 per cell; " + fmt("%.1f", secs) + "s, target < 600s)";
  return o;
}

Outcome ac3(const Context& ctx) {
  const auto r = grid(ctx, "ac3", {{10, 10, 1000, 0.10}}, 100);
  const auto& t = r.cells[0].tallies[kEkc];
  Outcome o;
  o.pass = t.converged > 0 && t.proportion() <= 0.05;
  o.detail = "ekc=" + fmt("%.3f", t.proportion()) + " at p_miss 0.10 (need <= 0.050)";
  return o;
}

Outcome ac4(const Context& ctx) {
  std::vector<SimCondition> cells;
  for (std::size_t n : {100, 250, 1000})
    for (std::size_t items : {3, 5, 10}) cells.push_back({1, items, n, 0.25});
  const auto r = grid(ctx, "ac4", cells, 100);
  Outcome o;
  o.pass = true;
  double worst = 1.0;
  for (const auto& cell : r.cells) {
    const double p = cell.tallies[kProfile].proportion();
    worst = std::min(worst, p);
    o.pass = o.pass && cell.tallies[kProfile].converged > 0 && p >= 0.90;
    o.detail += "n" + std::to_string(cell.condition.n) + "/i" + std::to_string(cell.condition.items_per_component) +
                "=" + fmt("%.2f", p) + " ";
  }
  o.detail += "(profile likelihood, need >= 0.90 per cell; min " + fmt("%.2f", worst) + ")";
  return o;
}

Outcome ac5(const Context& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = grid(ctx, "ac5", factorial_grid(), 100);
  const double secs = seconds_since(t0);
  const std::array<double, 4> target{0.733, 0.793, 0.878, 0.674};
  const auto& a = r.aggregate;
  Outcome o;
  const bool ordered = a[kParallel] > a[kEkc] && a[kEkc] > a[kKaiser] && a[kKaiser] > a[kProfile];
  bool close = true;
  for (std::size_t c = 0; c < 4; ++c) {
    const bool ok = std::abs(a[c] - target[c]) <= 0.05;
    close = close && ok;
    o.detail += std::string(to_string(kAllCriteria[c])) + "=" + fmt("%.3f", a[c]) + "/" + fmt("%.3f", target[c]) +
                (ok ? "" : "(off)") + " ";
  }
  o.pass = ordered && close && secs < 1800.0;
  o.detail += std::string("ordering ") + (ordered ? "ok" : "violated") + "; " + fmt("%.0f", secs) + "s, target < 1800s";
  return o;
}

Outcome ac6(const Context& ctx) {
  std::ostringstream log;
  std::size_t failures = 0;
  auto engine = make_engine({kSeed, 6});

  // Profile likelihood against direct evaluation of every split.
  std::exponential_distribution<double> expo(1.0);
  std::uniform_int_distribution<int> size(2, 30);
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> ev(static_cast<std::size_t>(size(engine)));
    for (auto& x : ev) x = expo(engine);
    std::sort(ev.rbegin(), ev.rend());
    const std::size_t k = ev.size();
    std::size_t best_q = 0;
    double best = 0.0;
    for (std::size_t q = 1; q < k; ++q) {
      double m1 = 0, m2 = 0;
      for (std::size_t i = 0; i < k; ++i) (i < q ? m1 : m2) += ev[i];
      m1 /= double(q);
      m2 /= double(k - q);
      double ss = 0;
      for (std::size_t i = 0; i < k; ++i) ss += std::pow(ev[i] - (i < q ? m1 : m2), 2);
      const double var = std::max(ss / double(k), 1e-12);
      double ll = 0;
      for (std::size_t i = 0; i < k; ++i)
        ll += -0.5 * std::log(2 * std::numbers::pi * var) - std::pow(ev[i] - (i < q ? m1 : m2), 2) / (2 * var);
      if (best_q == 0 || ll > best) {
        best = ll;
        best_q = q;
      }
    }
    failures += profile_likelihood(ev).k_retained != best_q;
  }
  log << "profile_likelihood_mismatches " << failures << "\n";
  std::size_t total = failures;

  // AUC against pairwise counting.
  failures = 0;
  std::uniform_int_distribution<int> len(2, 50), level(0, 7);
  for (int t = 0; t < 1000; ++t) {
    const auto n = static_cast<std::size_t>(len(engine));
    std::vector<double> s(n);
    Flag y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = level(engine);
      y[i] = level(engine) < 3;
    }
    y[0] = 1;
    y[1] = 0;
    double wins = 0, pairs = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (y[i] && !y[j]) {
          pairs += 1;
          wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
        }
    failures += std::abs(roc_auc(s, y) - wins / pairs) > 1e-12;
  }
  log << "auc_mismatches " << failures << "\n";
  total += failures;

  // Grouped binary logistic slope against ln(ad/bc).
  failures = 0;
  double worst = 0.0;
  std::uniform_int_distribution<int> cell(1, 150);
  for (int t = 0; t < 1000; ++t) {
    const int a = cell(engine), b = cell(engine), c = cell(engine), d = cell(engine);
    const int n = a + b + c + d;
    Flag y(static_cast<std::size_t>(n));
    Eigen::MatrixXd x(n, 1);
    int row = 0;
    for (auto [count, xv, yv] : {std::tuple{a, 0.0, 0}, {b, 0.0, 1}, {c, 1.0, 0}, {d, 1.0, 1}})
      for (int i = 0; i < count; ++i, ++row) {
        x(row, 0) = xv;
        y[static_cast<std::size_t>(row)] = static_cast<std::uint8_t>(yv);
      }
    const double err = std::abs(fit_logistic(y, x).coefficients[1] - std::log(double(a) * d / (double(b) * c)));
    worst = std::max(worst, err);
    failures += err >= 1e-8;
  }
  log << "log_odds_ratio_failures " << failures << " worst " << format_number(worst, 3) << "\n";
  total += failures;

  // Equicorrelation spectra.
  failures = 0;
  std::uniform_int_distribution<int> dim(2, 30);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    const int k = dim(engine);
    const double lo = -1.0 / (k - 1);
    const double rho = lo + (1.0 - lo) * (0.01 + 0.98 * unit(engine));
    CorrelationMatrix m;
    m.values = testing_support::equicorrelation(k, rho);
    const Eigen::VectorXd ev = pca(m).eigenvalues;
    std::vector<double> expected(static_cast<std::size_t>(k), 1.0 - rho);
    expected[0] = 1.0 + (k - 1) * rho;
    std::sort(expected.rbegin(), expected.rend());
    for (int i = 0; i < k; ++i) failures += std::abs(ev(i) - expected[static_cast<std::size_t>(i)]) > 1e-10;
  }
  log << "equicorrelation_failures " << failures << "\n";
  total += failures;

  write_text(ctx.dir / "ac6.txt", log.str());
  Outcome o;
  o.pass = total == 0;
  std::string flat = log.str();
  std::replace(flat.begin(), flat.end(), '\n', ';');
  o.detail = flat;
  return o;
}

Outcome ac7(const Context& ctx) {
  std::ostringstream log;
  bool pass = true;
  double worst = 0.0;
  std::uint64_t stream = 0;
  for (double rho : {-0.5, 0.0, 0.5, 0.7}) {
    for (double p : {0.25, 0.5}) {
      auto engine = make_engine({kSeed, 7, stream++});
      std::normal_distribution<double> z;
      const double t = normal_quantile(1.0 - p);
      const double s = std::sqrt(1.0 - rho * rho);
      BinaryMatrix v(100000, 2);
      for (Eigen::Index i = 0; i < v.rows(); ++i) {
        const double a = z(engine), b = rho * a + s * z(engine);
        v(i, 0) = a > t;
        v(i, 1) = b > t;
      }
      const double est = tetrachoric(IndicatorMatrix::from_binary(v, {"a", "b"})).values(0, 1);
      worst = std::max(worst, std::abs(est - rho));
      pass = pass && std::abs(est - rho) <= 0.02;
      log << "rho " << rho << " marginal " << p << " estimate " << format_number(est, 8) << "\n";
    }
  }
  double independence = 0.0;
  for (TwoByTwo t : {TwoByTwo{25, 25, 25, 25}, TwoByTwo{10, 30, 20, 60}, TwoByTwo{36, 12, 6, 2}, TwoByTwo{90, 10, 9, 1}})
    independence = std::max(independence, std::abs(tetrachoric_pair(t)));
  pass = pass && independence <= 1e-6;
  log << "independence_max " << format_number(independence, 3) << "\n";
  write_text(ctx.dir / "ac7.txt", log.str());
  return {pass, "max |error| " + fmt("%.4f", worst) + " (need <= 0.02); independence max " +
                    format_number(independence, 3) + " (need <= 1e-6)"};
}

Outcome ac8(const Context& ctx) {
  testing_support::write_csv(testing_support::propensity_dataset(1000, kSeed), (ctx.dir / "ac8_input.csv").string());
  RunConfig config;
  config.input_path = (ctx.dir / "ac8_input.csv").string();
  config.columns = {"y0", "y1", "y2", "y3", "y4", "y5"};
  config.seed = kSeed;
  config.threads = ctx.threads;
  config.output_dir = (ctx.dir / "ac8").string();
  const auto r = analyze_and_write(config);
  Outcome o;
  bool all_one = true;
  for (const auto& d : r.decisions) {
    all_one = all_one && d.converged && d.k_retained == 1;
    o.detail += std::string(to_string(d.criterion)) + "=" + (d.converged ? std::to_string(d.k_retained) : "NA") + " ";
  }
  const LogisticFit* joint = nullptr;
  if (r.mechanisms.size() == 1 && !r.mechanisms[0].fits.empty() && r.mechanisms[0].fits.back().fit) {
    joint = &*r.mechanisms[0].fits.back().fit;
  }
  const bool perfect = joint && joint->correct_pct == 1.0 && joint->separated;
  o.pass = all_one && perfect && r.indicators.cols() == 5;
  o.detail += "indicators=" + std::to_string(r.indicators.cols());
  if (joint) {
    o.detail += "; joint model correct=" + fmt("%.4f", joint->correct_pct) +
                " separated=" + (joint->separated ? "true" : "false");
  }
  return o;
}

using Criterion = std::function<Outcome(const Context&)>;

const std::vector<std::pair<std::string, Criterion>>& criteria() {
  static const std::vector<std::pair<std::string, Criterion>> list{
      {"AC1 single-component recovery (1x5, n=1000, p=0.25, 200 reps)", ac1},
      {"AC2 parallel analysis at n=1000, p=0.50 (6 cells, 100 reps)", ac2},
      {"AC3 EKC failure cell (10x10, n=1000, 100 reps)", ac3},
      {"AC4 profile likelihood one-component sweep (9 cells, 100 reps)", ac4},
      {"AC5 aggregate ordering on the 108-cell grid (100 reps)", ac5},
      {"AC6 oracle equivalence", ac6},
      {"AC7 tetrachoric recovery (n=100000)", ac7},
      {"AC8 mechanism pipeline on a single-propensity dataset", ac8},
  };
  return list;
}

std::map<std::string, std::string> files_under(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    out[fs::relative(entry.path(), root).string()] = ss.str();
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  unsigned threads = 4;
  std::string out = (fs::temp_directory_path() / "mispca_acceptance").string();
  std::vector<int> only;
  app.add_option("--threads", threads, "Worker threads for the graded run")->capture_default_str();
  app.add_option("--out", out, "Scratch directory for report files")->capture_default_str();
  app.add_option("--only", only, "Run a subset of criteria 1-8 (criterion 9 is skipped)");
  CLI11_PARSE(app, argc, argv);
  if (threads < 2) threads = 2;

  const fs::path root(out);
  fs::remove_all(root);
  const Context multi{root / "multi", threads};
  const Context single{root / "single", 1};
  fs::create_directories(multi.dir);
  fs::create_directories(single.dir);

  auto selected = [&](std::size_t i) {
    return only.empty() || std::find(only.begin(), only.end(), static_cast<int>(i + 1)) != only.end();
  };

  std::size_t failed = 0;
  for (std::size_t i = 0; i < criteria().size(); ++i) {
    if (!selected(i)) continue;
    Outcome o;
    try {
      o = criteria()[i].second(multi);
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("[%s] %s: %s\n", o.pass ? "PASS" : "FAIL", criteria()[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }

  if (only.empty()) {
    bool ran = true;
    for (const auto& [name, run] : criteria()) {
      try {
        run(single);
      } catch (const std::exception&) {
        ran = false;
      }
    }
    const auto a = files_under(multi.dir), b = files_under(single.dir);
    std::size_t differing = 0;
    std::string first_diff;
    std::set<std::string> names;
    for (const auto& [k, v] : a) names.insert(k);
    for (const auto& [k, v] : b) names.insert(k);
    for (const auto& name : names) {
      // The analysis manifest records its own output directory.
      if (name == "ac8/manifest.json" || name == "ac8_input.csv") continue;
      const auto ia = a.find(name), ib = b.find(name);
      if (ia == a.end() || ib == b.end() || ia->second != ib->second) {
        ++differing;
        if (first_diff.empty()) first_diff = name;
      }
    }
    const bool pass = ran && differing == 0 && !a.empty();
    failed += !pass;
    std::printf("[%s] AC9 determinism, 1 vs %u threads: %zu report files compared, %zu differ%s\n", pass ? "PASS" : "FAIL",
                threads, names.size(), differing, first_diff.empty() ? "" : (" (first: " + first_diff + ")").c_str());
  }
  std::printf("%zu criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
