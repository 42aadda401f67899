#include "kt/metrics/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace kt::metrics {

namespace {

double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// Continued-fraction core of I_x(a, b), valid for x < (a+1)/(a+b+2).
double beta_cf(double a, double b, double x) {
  constexpr double kEps = 1e-12;
  constexpr double kTiny = 1e-300;
  constexpr int kMaxIter = 500;

  double qab = a + b;
  double qap = a + 1.0;
  double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw std::runtime_error("incomplete_beta: continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0) throw std::invalid_argument("incomplete_beta: a, b must be positive");
  if (x < 0.0 || x > 1.0) throw std::invalid_argument("incomplete_beta: x outside [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  double front = std::exp(a * std::log(x) + b * std::log1p(-x) - log_beta(a, b));
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_cf(a, b, x) / a;
  }
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double t_cdf(double t, double nu) {
  if (nu <= 0.0) throw std::invalid_argument("t_cdf: nu must be positive");
  if (t == 0.0) return 0.5;
  double x = nu / (nu + t * t);
  double tail = 0.5 * incomplete_beta(nu / 2.0, 0.5, x);
  return t > 0.0 ? 1.0 - tail : tail;
}

double t_two_sided_p(double t, double nu) {
  double x = nu / (nu + t * t);
  double p = incomplete_beta(nu / 2.0, 0.5, x);
  return std::min(1.0, p);
}

double t_quantile(double prob, double nu) {
  if (prob <= 0.5 || prob >= 1.0) throw std::invalid_argument("t_quantile: prob must be in (0.5, 1)");
  double lo = 0.0;
  double hi = 1.0;
  while (t_cdf(hi, nu) < prob) {
    hi *= 2.0;
    if (hi > 1e12) throw std::runtime_error("t_quantile: bracket expansion failed");
  }
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    if (t_cdf(mid, nu) < prob) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-13 * std::max(1.0, hi)) break;
  }
  return 0.5 * (lo + hi);
}

std::vector<double> midranks(const std::vector<double>& values) {
  size_t n = values.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n, 0.0);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    double avg = 0.5 * double(i + j) + 1.0;  // 1-based average rank of the tie group
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

SpearmanResult spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman: length mismatch");
  size_t n = x.size();
  if (n < 3) throw std::invalid_argument("spearman: need at least 3 pairs");

  std::vector<double> rx = midranks(x);
  std::vector<double> ry = midranks(y);

  double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / double(n);
  double my = std::accumulate(ry.begin(), ry.end(), 0.0) / double(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double dx = rx[i] - mx;
    double dy = ry[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw std::invalid_argument("spearman: constant input");

  SpearmanResult out;
  out.rho = sxy / std::sqrt(sxx * syy);
  double r = std::clamp(out.rho, -1.0, 1.0);
  if (std::abs(r) >= 1.0) {
    out.p_value = 0.0;
    return out;
  }
  double df = double(n) - 2.0;
  double t = r * std::sqrt(df / (1.0 - r * r));
  out.p_value = t_two_sided_p(t, df);
  return out;
}

MeanCi mean_ci(const std::vector<double>& values, double level) {
  size_t n = values.size();
  if (n < 2) throw std::invalid_argument("mean_ci: need at least 2 values");
  if (level <= 0.0 || level >= 1.0) throw std::invalid_argument("mean_ci: level outside (0, 1)");
  double mean = std::accumulate(values.begin(), values.end(), 0.0) / double(n);
  double ss = 0.0;
  for (double v : values) {
    double d = v - mean;
    ss += d * d;
  }
  double sd = std::sqrt(ss / double(n - 1));
  double se = sd / std::sqrt(double(n));
  double t = se > 0.0 ? t_quantile(0.5 * (1.0 + level), double(n - 1)) : 0.0;
  MeanCi out;
  out.mean = mean;
  out.lower = mean - t * se;
  out.upper = mean + t * se;
  return out;
}

}  // namespace kt::metrics
