#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace kt::num {

#ifdef KT_FLOAT32
using real = float;
#else
using real = double;
#endif

// Dense row-major array of reals. Value semantics; shapes are small.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, real fill = real(0));
  static Tensor from(std::vector<std::size_t> shape, std::vector<real> values);
  static Tensor scalar(real v) { return from({1}, {v}); }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  // 2-D accessors; throw unless rank is 2
  std::size_t rows() const;
  std::size_t cols() const;
  real& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  real at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  real& operator[](std::size_t i) { return data_[i]; }
  real operator[](std::size_t i) const { return data_[i]; }

  std::vector<real>& data() { return data_; }
  const std::vector<real>& data() const { return data_; }

  std::string shape_str() const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<real> data_;
};

// C (+)= A @ B, shapes (m x k)(k x n)
void gemm_nn(const Tensor& a, const Tensor& b, Tensor& c, bool accumulate);
// C (+)= A @ B^T, shapes (m x k)(n x k)
void gemm_nt(const Tensor& a, const Tensor& b, Tensor& c, bool accumulate);
// C (+)= A^T @ B, shapes (k x m)(k x n)
void gemm_tn(const Tensor& a, const Tensor& b, Tensor& c, bool accumulate);

// Forward-only elementwise kernels shared by the tape ops.
Tensor sigmoid(const Tensor& x);
// Masked softmax over the last dimension; mask entries: nonzero = keep.
// Throws if any row is fully masked.
Tensor softmax_lastdim(const Tensor& x, const Tensor* mask = nullptr);
// Normalizes over the last dimension with population variance, then
// applies gain and bias (both sized to the last dimension).
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, real eps);
// Mean binary cross entropy over unmasked positions; probabilities are
// clamped to [1e-7, 1-1e-7] before the log. Throws if nothing is unmasked.
real bce_loss(const Tensor& probs, const Tensor& labels, const Tensor& mask);

inline constexpr real kProbClamp = real(1e-7);

}  // namespace kt::num
