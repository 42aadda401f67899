#include "kt/metrics/ols.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "kt/metrics/stats.hpp"

namespace kt::metrics {

RegressionResult ols(const std::vector<std::string>& names,
                     const std::vector<std::vector<double>>& columns,
                     const std::vector<double>& y) {
  size_t p = columns.size();
  if (p == 0 || names.size() != p) throw std::invalid_argument("ols: names/columns mismatch");
  size_t n = y.size();
  for (const auto& col : columns) {
    if (col.size() != n) throw std::invalid_argument("ols: column length mismatch");
  }
  if (n <= p) throw std::invalid_argument("ols: need more observations than regressors");

  // Column-major working copy of X; qty starts as y and becomes Q'y.
  std::vector<std::vector<double>> a = columns;
  std::vector<double> qty = y;

  // Householder triangularization, applied column by column.
  double max_pivot = 0.0;
  for (size_t k = 0; k < p; ++k) {
    double norm = 0.0;
    for (size_t i = k; i < n; ++i) norm += a[k][i] * a[k][i];
    norm = std::sqrt(norm);
    max_pivot = std::max(max_pivot, norm);
    if (norm <= 1e-10 * std::max(1.0, max_pivot)) {
      throw std::runtime_error("ols: column '" + names[k] +
                               "' is collinear with the columns before it");
    }
    double alpha = a[k][k] > 0.0 ? -norm : norm;
    // v = x - alpha*e_k, stored in place below the diagonal of column k.
    std::vector<double> v(n - k);
    v[0] = a[k][k] - alpha;
    for (size_t i = k + 1; i < n; ++i) v[i - k] = a[k][i];
    double vtv = 0.0;
    for (double vi : v) vtv += vi * vi;
    a[k][k] = alpha;
    for (size_t i = k + 1; i < n; ++i) a[k][i] = 0.0;
    if (vtv == 0.0) continue;
    for (size_t j = k + 1; j < p; ++j) {
      double dot = 0.0;
      for (size_t i = k; i < n; ++i) dot += v[i - k] * a[j][i];
      double f = 2.0 * dot / vtv;
      for (size_t i = k; i < n; ++i) a[j][i] -= f * v[i - k];
    }
    double dot = 0.0;
    for (size_t i = k; i < n; ++i) dot += v[i - k] * qty[i];
    double f = 2.0 * dot / vtv;
    for (size_t i = k; i < n; ++i) qty[i] -= f * v[i - k];
  }

  // Back-substitute R b = (Q'y)_head.
  std::vector<double> beta(p, 0.0);
  for (size_t kk = p; kk-- > 0;) {
    double s = qty[kk];
    for (size_t j = kk + 1; j < p; ++j) s -= a[j][kk] * beta[j];
    beta[kk] = s / a[kk][kk];
  }

  // Residual sum of squares is the tail of Q'y.
  double ssr = 0.0;
  for (size_t i = p; i < n; ++i) ssr += qty[i] * qty[i];

  double ybar = std::accumulate(y.begin(), y.end(), 0.0) / double(n);
  double sst = 0.0;
  for (double yi : y) {
    double d = yi - ybar;
    sst += d * d;
  }

  RegressionResult out;
  out.n = n;
  out.p = p;
  double df = double(n - p);
  out.sigma2 = ssr / df;
  out.r_squared = sst > 0.0 ? 1.0 - ssr / sst : 0.0;
  out.adj_r_squared = 1.0 - (1.0 - out.r_squared) * double(n - 1) / df;

  // diag((X'X)^-1)_k = ||R^-T e_k||^2, via forward substitution on R'.
  out.terms.resize(p);
  for (size_t k = 0; k < p; ++k) {
    std::vector<double> w(p, 0.0);
    for (size_t i = 0; i < p; ++i) {
      double s = (i == k) ? 1.0 : 0.0;
      for (size_t j = 0; j < i; ++j) s -= a[i][j] * w[j];
      w[i] = s / a[i][i];
    }
    double diag = 0.0;
    for (size_t i = k; i < p; ++i) diag += w[i] * w[i];
    OlsTerm& term = out.terms[k];
    term.name = names[k];
    term.coef = beta[k];
    term.se = std::sqrt(out.sigma2 * diag);
    term.t = term.se > 0.0 ? term.coef / term.se : 0.0;
    term.p_value = term.se > 0.0 ? t_two_sided_p(term.t, df) : 0.0;
  }
  return out;
}

}  // namespace kt::metrics
