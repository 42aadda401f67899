#pragma once

#include <functional>
#include <vector>

#include "kt/num/tensor.hpp"

namespace kt::num {

// A scalar function of a flat parameter vector, with its tape gradient.
struct DiffProblem {
  std::function<double(const std::vector<real>&)> value;
  std::function<std::vector<real>(const std::vector<real>&)> tape_gradient;
};

// Central-difference check: max over coordinates of |fd - g| / max(1, |g|).
double grad_check(const DiffProblem& f, const std::vector<real>& point, double eps);

}  // namespace kt::num
