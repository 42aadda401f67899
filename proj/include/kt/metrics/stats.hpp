#pragma once

#include <utility>
#include <vector>

namespace kt::metrics {

// Regularized incomplete beta I_x(a, b), evaluated by Lentz's continued
// fraction to 1e-12.
double incomplete_beta(double a, double b, double x);

// Student-t distribution, nu degrees of freedom.
double t_cdf(double t, double nu);
double t_two_sided_p(double t, double nu);
// Upper-tail quantile: the t with P(T <= t) = prob, prob in (0.5, 1).
double t_quantile(double prob, double nu);

struct SpearmanResult {
  double rho = 0.0;
  double p_value = 1.0;
};

// Pearson correlation of midranks; p-value from the t approximation with
// n-2 degrees of freedom, two-sided. Throws on length < 3, length mismatch,
// or a constant input vector.
SpearmanResult spearman(const std::vector<double>& x, const std::vector<double>& y);

struct MeanCi {
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

// t-based confidence interval, mean +- t_{df,(1+level)/2} * s / sqrt(n).
// Throws on fewer than 2 values.
MeanCi mean_ci(const std::vector<double>& values, double level = 0.95);

// Midranks (average rank for ties), 1-based.
std::vector<double> midranks(const std::vector<double>& values);

}  // namespace kt::metrics
