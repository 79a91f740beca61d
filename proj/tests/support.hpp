#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mispca/correlation.hpp"
#include "mispca/dataset.hpp"
#include "mispca/indicators.hpp"
#include "mispca/random.hpp"

namespace testing_support {

// Two indicator columns laid out to reproduce a 2x2 table exactly.
inline mispca::IndicatorMatrix from_table(const mispca::TwoByTwo& t) {
  const auto total = static_cast<Eigen::Index>(t.total());
  mispca::BinaryMatrix v(total, 2);
  Eigen::Index row = 0;
  auto fill = [&](double count, std::uint8_t a, std::uint8_t b) {
    for (int i = 0; i < static_cast<int>(count); ++i, ++row) {
      v(row, 0) = a;
      v(row, 1) = b;
    }
  };
  fill(t.n00, 0, 0);
  fill(t.n01, 0, 1);
  fill(t.n10, 1, 0);
  fill(t.n11, 1, 1);
  return mispca::IndicatorMatrix::from_binary(v, {"a", "b"});
}

inline std::vector<std::string> names(std::size_t k, const std::string& stem = "x") {
  std::vector<std::string> out;
  for (std::size_t j = 0; j < k; ++j) out.push_back(stem + std::to_string(j + 1));
  return out;
}

inline Eigen::MatrixXd equicorrelation(Eigen::Index k, double rho) {
  Eigen::MatrixXd r = Eigen::MatrixXd::Constant(k, k, rho);
  r.diagonal().setOnes();
  return r;
}


// y0 complete; y1..y5 go missing when a shared latent propensity plus noise
// crosses a threshold. Also carries an unrelated covariate and a two-level group.
inline mispca::Dataset propensity_dataset(std::size_t n, std::uint64_t seed) {
  auto engine = mispca::make_engine({seed, 0x4d50});
  std::normal_distribution<double> z;
  std::bernoulli_distribution coin(0.5);
  std::vector<double> y0(n), age(n);
  std::vector<std::vector<double>> ys(5, std::vector<double>(n));
  std::vector<std::optional<std::string>> group(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double propensity = z(engine);
    y0[i] = z(engine);
    age[i] = 40.0 + 10.0 * z(engine);
    group[i] = coin(engine) ? "a" : "b";
    for (std::size_t j = 0; j < 5; ++j) {
      const bool missing = 0.8 * propensity + 0.6 * z(engine) > 0.7;
      ys[j][i] = missing ? std::numeric_limits<double>::quiet_NaN() : y0[i] + z(engine);
    }
  }
  std::vector<mispca::Column> cols{mispca::Column::numeric("y0", y0)};
  for (std::size_t j = 0; j < 5; ++j) cols.push_back(mispca::Column::numeric("y" + std::to_string(j + 1), ys[j]));
  cols.push_back(mispca::Column::numeric("age", age));
  cols.push_back(mispca::Column::categorical("group", group));
  return mispca::Dataset(cols);
}

inline void write_csv(const mispca::Dataset& d, const std::string& path) {
  std::ofstream out(path);
  const auto names = d.column_names();
  for (std::size_t j = 0; j < names.size(); ++j) out << (j ? "," : "") << names[j];
  out << "\n";
  char buf[64];
  for (std::size_t i = 0; i < d.rows(); ++i) {
    for (std::size_t j = 0; j < d.cols(); ++j) {
      const auto& c = d.column(j);
      if (j) out << ",";
      if (c.is_missing(i)) {
        out << "NA";
      } else if (c.type() == mispca::ColumnType::numeric) {
        std::snprintf(buf, sizeof buf, "%.17g", c.number(i));
        out << buf;
      } else {
        out << *c.text(i);
      }
    }
    out << "\n";
  }
}

}  // namespace testing_support
