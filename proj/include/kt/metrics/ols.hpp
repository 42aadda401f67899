#pragma once

#include <string>
#include <vector>

namespace kt::metrics {

struct OlsTerm {
  std::string name;
  double coef = 0.0;
  double se = 0.0;
  double t = 0.0;
  double p_value = 1.0;
};

struct RegressionResult {
  std::vector<OlsTerm> terms;
  double r_squared = 0.0;      // vs the grand-mean null
  double adj_r_squared = 0.0;  // 1 - (1-R2)(n-1)/(n-p)
  double sigma2 = 0.0;         // SSR / (n - p)
  size_t n = 0;
  size_t p = 0;
};

// Least squares via Householder QR. `columns` is column-major: columns[j][i]
// is observation i of regressor j. Standard errors come from sigma2*(X'X)^-1.
// Throws when n <= p or when a column is (numerically) collinear with the
// ones before it, naming the offending column.
RegressionResult ols(const std::vector<std::string>& names,
                     const std::vector<std::vector<double>>& columns,
                     const std::vector<double>& y);

}  // namespace kt::metrics
