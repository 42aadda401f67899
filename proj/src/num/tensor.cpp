#include "kt/num/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace kt::num {

namespace {

std::size_t count(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, real fill)
    : shape_(std::move(shape)), data_(count(shape_), fill) {}

Tensor Tensor::from(std::vector<std::size_t> shape, std::vector<real> values) {
  Tensor t;
  if (count(shape) != values.size())
    throw std::invalid_argument("Tensor::from: shape/value count mismatch");
  t.shape_ = std::move(shape);
  t.data_ = std::move(values);
  return t;
}

std::size_t Tensor::rows() const {
  if (rank() != 2) throw std::logic_error("Tensor::rows on rank " + std::to_string(rank()));
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw std::logic_error("Tensor::cols on rank " + std::to_string(rank()));
  return shape_[1];
}

std::string Tensor::shape_str() const {
  std::string s = "(";
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape_[i]);
  }
  return s + ")";
}

void gemm_nn(const Tensor& a, const Tensor& b, Tensor& c, bool accumulate) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k || c.rows() != m || c.cols() != n)
    throw std::invalid_argument("gemm_nn: shape mismatch " + a.shape_str() + b.shape_str());
  if (!accumulate) std::fill(c.data().begin(), c.data().end(), real(0));
  const real* A = a.data().data();
  const real* B = b.data().data();
  real* C = c.data().data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const real aip = A[i * k + p];
      if (aip == real(0)) continue;
      const real* Bp = B + p * n;
      real* Ci = C + i * n;
      for (std::size_t j = 0; j < n; ++j) Ci[j] += aip * Bp[j];
    }
}

void gemm_nt(const Tensor& a, const Tensor& b, Tensor& c, bool accumulate) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  if (b.cols() != k || c.rows() != m || c.cols() != n)
    throw std::invalid_argument("gemm_nt: shape mismatch " + a.shape_str() + b.shape_str());
  if (!accumulate) std::fill(c.data().begin(), c.data().end(), real(0));
  const real* A = a.data().data();
  const real* B = b.data().data();
  real* C = c.data().data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const real* Ai = A + i * k;
      const real* Bj = B + j * k;
      real acc = real(0);
      for (std::size_t p = 0; p < k; ++p) acc += Ai[p] * Bj[p];
      C[i * n + j] += acc;
    }
}

void gemm_tn(const Tensor& a, const Tensor& b, Tensor& c, bool accumulate) {
  const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
  if (b.rows() != k || c.rows() != m || c.cols() != n)
    throw std::invalid_argument("gemm_tn: shape mismatch " + a.shape_str() + b.shape_str());
  if (!accumulate) std::fill(c.data().begin(), c.data().end(), real(0));
  const real* A = a.data().data();
  const real* B = b.data().data();
  real* C = c.data().data();
  for (std::size_t p = 0; p < k; ++p) {
    const real* Ap = A + p * m;
    const real* Bp = B + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const real api = Ap[i];
      if (api == real(0)) continue;
      real* Ci = C + i * n;
      for (std::size_t j = 0; j < n; ++j) Ci[j] += api * Bp[j];
    }
  }
}

Tensor sigmoid(const Tensor& x) {
  Tensor y = x;
  for (real& v : y.data()) {
    if (v >= real(0)) {
      v = real(1) / (real(1) + std::exp(-v));
    } else {
      const real e = std::exp(v);
      v = e / (real(1) + e);
    }
  }
  return y;
}

Tensor softmax_lastdim(const Tensor& x, const Tensor* mask) {
  if (x.rank() == 0 || x.size() == 0) throw std::invalid_argument("softmax_lastdim: empty input");
  if (mask && !mask->same_shape(x))
    throw std::invalid_argument("softmax_lastdim: mask shape mismatch");
  const std::size_t n = x.shape().back();
  const std::size_t rows = x.size() / n;
  Tensor y = x;
  for (std::size_t r = 0; r < rows; ++r) {
    const real* xr = x.data().data() + r * n;
    const real* mr = mask ? mask->data().data() + r * n : nullptr;
    real* yr = y.data().data() + r * n;
    real mx = -std::numeric_limits<real>::infinity();
    for (std::size_t j = 0; j < n; ++j)
      if (!mr || mr[j] != real(0)) mx = std::max(mx, xr[j]);
    if (mx == -std::numeric_limits<real>::infinity())
      throw std::runtime_error("softmax_lastdim: fully masked row " + std::to_string(r));
    real sum = real(0);
    for (std::size_t j = 0; j < n; ++j) {
      if (!mr || mr[j] != real(0)) {
        yr[j] = std::exp(xr[j] - mx);
        sum += yr[j];
      } else {
        yr[j] = real(0);
      }
    }
    for (std::size_t j = 0; j < n; ++j) yr[j] /= sum;
  }
  return y;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, real eps) {
  const std::size_t n = x.shape().back();
  if (gain.size() != n || bias.size() != n)
    throw std::invalid_argument("layer_norm: gain/bias must match the last dimension");
  const std::size_t rows = x.size() / n;
  Tensor y = x;
  for (std::size_t r = 0; r < rows; ++r) {
    const real* xr = x.data().data() + r * n;
    real* yr = y.data().data() + r * n;
    real mean = real(0);
    for (std::size_t j = 0; j < n; ++j) mean += xr[j];
    mean /= real(n);
    real var = real(0);
    for (std::size_t j = 0; j < n; ++j) var += (xr[j] - mean) * (xr[j] - mean);
    var /= real(n);
    const real inv = real(1) / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) yr[j] = gain[j] * ((xr[j] - mean) * inv) + bias[j];
  }
  return y;
}

real bce_loss(const Tensor& probs, const Tensor& labels, const Tensor& mask) {
  if (labels.size() != probs.size() || mask.size() != probs.size())
    throw std::invalid_argument("bce_loss: size mismatch");
  real sum = real(0);
  std::size_t count = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (mask[i] == real(0)) continue;
    const real p = std::min(real(1) - kProbClamp, std::max(kProbClamp, probs[i]));
    const real y = labels[i];
    sum += -(y * std::log(p) + (real(1) - y) * std::log(real(1) - p));
    ++count;
  }
  if (count == 0) throw std::runtime_error("bce_loss: zero unmasked positions");
  return sum / real(count);
}

}  // namespace kt::num
