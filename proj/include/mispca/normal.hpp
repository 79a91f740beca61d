#pragma once

namespace mispca {

double normal_cdf(double x);
double normal_quantile(double p);

/// P(X <= h, Y <= k) for standard bivariate normal with correlation rho.
/// Gauss-Legendre quadrature after Drezner-Wesolowsky and Genz; absolute
/// error below 1e-14 over the full parameter range.
double bivariate_normal_cdf(double h, double k, double rho);

}  // namespace mispca
