#pragma once

#include <functional>
#include <vector>

#include "kt/num/tensor.hpp"
#include "kt/rng.hpp"

namespace kt::num {

// Handle to a node on a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode differentiation record. Nodes are appended in evaluation
// order, which is a topological order by construction; backward() replays
// it in reverse. A tape belongs to one thread.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value);

  const Tensor& value(Var v) const { return node(v).value; }
  // Zero for nodes the loss does not reach. Valid after backward().
  const Tensor& grad(Var v) const;

  // Populates gradients for every node reachable from loss (a scalar).
  void backward(Var loss);

  // --- primitives -------------------------------------------------------
  Var add(Var a, Var b);                 // same shape
  Var add_rowvec(Var a, Var v);          // (m x n) + (n)
  Var mul(Var a, Var b);                 // elementwise
  Var scale(Var a, real c);
  Var matmul(Var a, Var b);              // (m x k)(k x n)
  Var matmul_nt(Var a, Var b);           // A @ B^T, (m x k)(n x k)
  Var sigmoid(Var a);
  Var tanh_(Var a);
  Var relu(Var a);
  Var softmax_lastdim(Var a, Tensor mask);   // empty mask = unmasked
  Var layer_norm(Var x, Var gain, Var bias, real eps);
  // Gathers rows of a 2-D table; id < 0 yields a zero row with no gradient.
  Var embed(Var table, std::vector<int> ids);
  Var slice_cols(Var a, std::size_t c0, std::size_t c1);
  Var concat_cols(const std::vector<Var>& parts);
  // Flattens each part and concatenates into one 1-D node.
  Var concat_flat(const std::vector<Var>& parts);
  // out[i] = a(i, cols[i])
  Var gather_cols(Var a, std::vector<int> cols);
  // Inverted dropout; identity when train is false or rate <= 0.
  Var dropout(Var a, double rate, Rng& rng, bool train);
  // Scalar mean BCE over unmasked positions, clamped per kProbClamp.
  Var bce_mean(Var probs, Tensor labels, Tensor mask);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void(Tape&)> back;  // null for leaves
  };

  Node& node(Var v);
  const Node& node(Var v) const;
  Tensor& g(int id) { return nodes_[std::size_t(id)].grad; }
  const Tensor& val(int id) const { return nodes_[std::size_t(id)].value; }
  Var push(Tensor value, std::function<void(Tape&)> back);

  std::vector<Node> nodes_;
  bool has_grads_ = false;
};

}  // namespace kt::num
