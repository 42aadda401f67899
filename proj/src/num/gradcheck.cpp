#include "kt/num/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace kt::num {

double grad_check(const DiffProblem& f, const std::vector<real>& point, double eps) {
  const std::vector<real> g = f.tape_gradient(point);
  double worst = 0.0;
  std::vector<real> p = point;
  for (std::size_t i = 0; i < point.size(); ++i) {
    p[i] = real(double(point[i]) + eps);
    const double up = f.value(p);
    p[i] = real(double(point[i]) - eps);
    const double dn = f.value(p);
    p[i] = point[i];
    const double fd = (up - dn) / (2.0 * eps);
    const double err = std::abs(fd - double(g[i])) / std::max(1.0, std::abs(double(g[i])));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace kt::num
