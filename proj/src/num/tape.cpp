#include "kt/num/tape.hpp"

#include <algorithm>
#include <cmath>

namespace kt::num {

Tape::Node& Tape::node(Var v) {
  if (!v.valid() || std::size_t(v.id) >= nodes_.size())
    throw std::invalid_argument("Tape: variable is not on this tape");
  return nodes_[std::size_t(v.id)];
}

const Tape::Node& Tape::node(Var v) const {
  if (!v.valid() || std::size_t(v.id) >= nodes_.size())
    throw std::invalid_argument("Tape: variable is not on this tape");
  return nodes_[std::size_t(v.id)];
}

const Tensor& Tape::grad(Var v) const {
  const Node& n = node(v);
  if (!has_grads_) throw std::logic_error("Tape::grad before backward()");
  return n.grad;
}

Var Tape::push(Tensor value, std::function<void(Tape&)> back) {
  nodes_.push_back(Node{std::move(value), Tensor{}, std::move(back)});
  return Var{int(nodes_.size()) - 1};
}

Var Tape::leaf(Tensor value) { return push(std::move(value), nullptr); }

void Tape::backward(Var loss) {
  const Node& ln = node(loss);  // throws if not on tape
  if (ln.value.size() != 1) throw std::invalid_argument("Tape::backward: loss must be scalar");
  for (Node& n : nodes_) n.grad = Tensor(n.value.shape());
  has_grads_ = true;
  nodes_[std::size_t(loss.id)].grad[0] = real(1);
  for (int i = loss.id; i >= 0; --i) {
    if (nodes_[std::size_t(i)].back) nodes_[std::size_t(i)].back(*this);
  }
}

Var Tape::add(Var a, Var b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  if (!va.same_shape(vb))
    throw std::invalid_argument("add: shape mismatch " + va.shape_str() + vb.shape_str());
  Tensor out = va;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += vb[i];
  const int ia = a.id, ib = b.id;
  Var o = push(std::move(out), nullptr);
  const int io = o.id;
  nodes_[std::size_t(io)].back = [ia, ib, io](Tape& t) {
    const Tensor& go = t.g(io);
    Tensor& ga = t.g(ia);
    Tensor& gb = t.g(ib);
    for (std::size_t i = 0; i < go.size(); ++i) {
      ga[i] += go[i];
      gb[i] += go[i];
    }
  };
  return o;
}

Var Tape::add_rowvec(Var a, Var v) {
  const Tensor& va = value(a);
  const Tensor& vv = value(v);
  if (va.rank() != 2 || vv.size() != va.cols())
    throw std::invalid_argument("add_rowvec: need (m x n) + (n)");
  Tensor out = va;
  const std::size_t m = va.rows(), n = va.cols();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.at(i, j) += vv[j];
  const int ia = a.id, iv = v.id;
  Var o = push(std::move(out), nullptr);
  const int io = o.id;
  nodes_[std::size_t(io)].back = [ia, iv, io, m, n](Tape& t) {
    const Tensor& go = t.g(io);
    Tensor& ga = t.g(ia);
    Tensor& gv = t.g(iv);
    for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) gv[j] += go[i * n + j];
  };
  return o;
}

Var Tape::mul(Var a, Var b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  if (!va.same_shape(vb))
    throw std::invalid_argument("mul: shape mismatch " + va.shape_str() + vb.shape_str());
  Tensor out = va;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= vb[i];
  const int ia = a.id, ib = b.id;
  Var o = push(std::move(out), nullptr);
  const int io = o.id;
  nodes_[std::size_t(io)].back = [ia, ib, io](Tape& t) {
    const Tensor& go = t.g(io);
    const Tensor& va = t.val(ia);
    const Tensor& vb = t.val(ib);
    Tensor& ga = t.g(ia);
    Tensor& gb = t.g(ib);
    for (std::size_t i = 0; i < go.size(); ++i) {
      ga[i] += go[i] * vb[i];
      gb[i] += go[i] * va[i];
    }
  };
  return o;
}

Var Tape::scale(Var a, real c) {
  Tensor out = value(a);
  for (real& v : out.data()) v *= c;
  const int ia = a.id;
  Var o = push(std::move(out), nullptr);
  const int io = o.id;
  nodes_[std::size_t(io)].back = [ia, io, c](Tape& t) {
    const Tensor& go = t.g(io);
    Tensor& ga = t.g(ia);
    for (std::size_t i = 0; i < go.size(); ++i) ga[i] += c * go[i];
  };
  return o;
}

Var Tape::matmul(Var a, Var b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  Tensor out({va.rows(), vb.cols()});
  gemm_nn(va, vb, out, false);
  const int ia = a.id, ib = b.id;
  Var o = push(std::move(out), nullptr);
  const int io = o.id;
  nodes_[std::size_t(io)].back = [ia, ib, io](Tape& t) {
    const Tensor& go = t.g(io);
    gemm_nt(go, t.val(ib), t.g(ia), true);  // dA += dC @ B^T
    gemm_tn(t.val(ia), go, t.g(ib), true);  // dB += A^T @ dC
  };
  return o;
}

Var Tape::matmul_nt(Var a, Var b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  Tensor out({va.rows(), vb.rows()});
  gemm_nt(va, vb, out, false);
  const int ia = a.id, ib = b.id;
  Var o = push(std::move(out), nullptr);
  const int io = o.id;
  nodes_[std::size_t(io)].back = [ia, ib, io](Tape& t) {
    const Tensor& go = t.g(io);
    gemm_nn(go, t.val(ib), t.g(ia), true);  // dA += dC @ B
    gemm_tn(go, t.val(ia), t.g(ib), true);  // dB += dC^T @ A
  };
  return o;
}

Var Tape::sigmoid(Var a) {
  Tensor out = num::sigmoid(value(a));
  const int ia = a.id;
  Var o = push(std::move(out), nullptr);
  const int io = o.id;
  nodes_[std::size_t(io)].back = [ia, io](Tape& t) {
    const Tensor& go = t.g(io);
    const Tensor& y = t.val(io);
    Tensor& ga = t.g(ia);
    for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * y[i] * (real(1) - y[i]);
  };
  return o;
}

Var Tape::tanh_(Var a) {
  Tensor out = value(a);
  for (real& v : out.data()) v = std::tanh(v);
  const int ia = a.id;
  Var o = push(std::move(out), nullptr);
  const int io = o.id;
  nodes_[std::size_t(io)].back = [ia, io](Tape& t) {
    const Tensor& go = t.g(io);
    const Tensor& y = t.val(io);
    Tensor& ga = t.g(ia);
    for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * (real(1) - y[i] * y[i]);
  };
  return o;
}

Var Tape::relu(Var a) {
  Tensor out = value(a);
  for (real& v : out.data()) v = std::max(real(0), v);
  const int ia = a.id;
  Var o = push(std::move(out), nullptr);
  const int io = o.id;
  nodes_[std::size_t(io)].back = [ia, io](Tape& t) {
    const Tensor& go = t.g(io);
    const Tensor& x = t.val(ia);
    Tensor& ga = t.g(ia);
    for (std::size_t i = 0; i < go.size(); ++i)
      if (x[i] > real(0)) ga[i] += go[i];
  };
  return o;
}

Var Tape::softmax_lastdim(Var a, Tensor mask) {
  const Tensor* mp = mask.size() ? &mask : nullptr;
  Tensor out = num::softmax_lastdim(value(a), mp);
  const std::size_t n = out.shape().back();
  const int ia = a.id;
  Var o = push(std::move(out), nullptr);
  const int io = o.id;
  nodes_[std::size_t(io)].back = [ia, io, n](Tape& t) {
    // dx_j = y_j * (dy_j - sum_k dy_k y_k) per row; masked entries have y = 0
    const Tensor& go = t.g(io);
    const Tensor& y = t.val(io);
    Tensor& ga = t.g(ia);
    const std::size_t rows = y.size() / n;
    for (std::size_t r = 0; r < rows; ++r) {
      const real* yr = y.data().data() + r * n;
      const real* gr = go.data().data() + r * n;
      real dot = real(0);
      for (std::size_t j = 0; j < n; ++j) dot += gr[j] * yr[j];
      real* gar = ga.data().data() + r * n;
      for (std::size_t j = 0; j < n; ++j) gar[j] += yr[j] * (gr[j] - dot);
    }
  };
  return o;
}

Var Tape::layer_norm(Var x, Var gain, Var bias, real eps) {
  const Tensor& vx = value(x);
  const std::size_t n = vx.shape().back();
  Tensor out = num::layer_norm(vx, value(gain), value(bias), eps);
  const int ix = x.id, ig = gain.id, ib = bias.id;
  Var o = push(std::move(out), nullptr);
  const int io = o.id;
  nodes_[std::size_t(io)].back = [ix, ig, ib, io, n, eps](Tape& t) {
    const Tensor& go = t.g(io);
    const Tensor& vx = t.val(ix);
    const Tensor& vg = t.val(ig);
    Tensor& gx = t.g(ix);
    Tensor& gg = t.g(ig);
    Tensor& gb = t.g(ib);
    const std::size_t rows = vx.size() / n;
    std::vector<real> xhat(n);
    for (std::size_t r = 0; r < rows; ++r) {
      const real* xr = vx.data().data() + r * n;
      const real* gr = go.data().data() + r * n;
      real mean = real(0);
      for (std::size_t j = 0; j < n; ++j) mean += xr[j];
      mean /= real(n);
      real var = real(0);
      for (std::size_t j = 0; j < n; ++j) var += (xr[j] - mean) * (xr[j] - mean);
      var /= real(n);
      const real inv = real(1) / std::sqrt(var + eps);
      real mean_d = real(0), mean_dx = real(0);
      for (std::size_t j = 0; j < n; ++j) {
        xhat[j] = (xr[j] - mean) * inv;
        const real d = gr[j] * vg[j];
        mean_d += d;
        mean_dx += d * xhat[j];
      }
      mean_d /= real(n);
      mean_dx /= real(n);
      real* gxr = gx.data().data() + r * n;
      for (std::size_t j = 0; j < n; ++j) {
        const real d = gr[j] * vg[j];
        gxr[j] += inv * (d - mean_d - xhat[j] * mean_dx);
        gg[j] += gr[j] * xhat[j];
        gb[j] += gr[j];
      }
    }
  };
  return o;
}

Var Tape::embed(Var table, std::vector<int> ids) {
  const Tensor& vt = value(table);
  const std::size_t d = vt.cols();
  Tensor out({ids.size(), d});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0) continue;  // zero row
    if (std::size_t(ids[i]) >= vt.rows())
      throw std::out_of_range("embed: id " + std::to_string(ids[i]) + " out of range");
    for (std::size_t j = 0; j < d; ++j) out.at(i, j) = vt.at(std::size_t(ids[i]), j);
  }
  const int it = table.id;
  Var o = push(std::move(out), nullptr);
  const int io = o.id;
  nodes_[std::size_t(io)].back = [it, io, ids = std::move(ids), d](Tape& t) {
    const Tensor& go = t.g(io);
    Tensor& gt = t.g(it);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] < 0) continue;
      for (std::size_t j = 0; j < d; ++j) gt.at(std::size_t(ids[i]), j) += go.at(i, j);
    }
  };
  return o;
}

Var Tape::slice_cols(Var a, std::size_t c0, std::size_t c1) {
  const Tensor& va = value(a);
  if (c0 >= c1 || c1 > va.cols()) throw std::invalid_argument("slice_cols: bad range");
  const std::size_t m = va.rows(), w = c1 - c0;
  Tensor out({m, w});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < w; ++j) out.at(i, j) = va.at(i, c0 + j);
  const int ia = a.id;
  Var o = push(std::move(out), nullptr);
  const int io = o.id;
  nodes_[std::size_t(io)].back = [ia, io, c0, m, w](Tape& t) {
    const Tensor& go = t.g(io);
    Tensor& ga = t.g(ia);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < w; ++j) ga.at(i, c0 + j) += go.at(i, j);
  };
  return o;
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no parts");
  const std::size_t m = value(parts[0]).rows();
  std::size_t total = 0;
  for (Var p : parts) {
    if (value(p).rows() != m) throw std::invalid_argument("concat_cols: row mismatch");
    total += value(p).cols();
  }
  Tensor out({m, total});
  std::size_t off = 0;
  std::vector<int> ids;
  std::vector<std::size_t> offs;
  for (Var p : parts) {
    const Tensor& vp = value(p);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < vp.cols(); ++j) out.at(i, off + j) = vp.at(i, j);
    ids.push_back(p.id);
    offs.push_back(off);
    off += vp.cols();
  }
  Var o = push(std::move(out), nullptr);
  const int io = o.id;
  nodes_[std::size_t(io)].back = [ids, offs, io, m](Tape& t) {
    const Tensor& go = t.g(io);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      Tensor& gp = t.g(ids[k]);
      const std::size_t w = gp.cols();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < w; ++j) gp.at(i, j) += go.at(i, offs[k] + j);
    }
  };
  return o;
}

Var Tape::concat_flat(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_flat: no parts");
  std::size_t total = 0;
  for (Var p : parts) total += value(p).size();
  Tensor out({total});
  std::size_t off = 0;
  std::vector<int> ids;
  std::vector<std::size_t> offs;
  for (Var p : parts) {
    const Tensor& vp = value(p);
    std::copy(vp.data().begin(), vp.data().end(), out.data().begin() + long(off));
    ids.push_back(p.id);
    offs.push_back(off);
    off += vp.size();
  }
  Var o = push(std::move(out), nullptr);
  const int io = o.id;
  nodes_[std::size_t(io)].back = [ids, offs, io](Tape& t) {
    const Tensor& go = t.g(io);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      Tensor& gp = t.g(ids[k]);
      for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += go[offs[k] + i];
    }
  };
  return o;
}

Var Tape::gather_cols(Var a, std::vector<int> cols) {
  const Tensor& va = value(a);
  if (cols.size() != va.rows()) throw std::invalid_argument("gather_cols: one column per row");
  Tensor out({cols.size()});
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (cols[i] < 0 || std::size_t(cols[i]) >= va.cols())
      throw std::out_of_range("gather_cols: column out of range");
    out[i] = va.at(i, std::size_t(cols[i]));
  }
  const int ia = a.id;
  Var o = push(std::move(out), nullptr);
  const int io = o.id;
  nodes_[std::size_t(io)].back = [ia, io, cols = std::move(cols)](Tape& t) {
    const Tensor& go = t.g(io);
    Tensor& ga = t.g(ia);
    for (std::size_t i = 0; i < cols.size(); ++i) ga.at(i, std::size_t(cols[i])) += go[i];
  };
  return o;
}

Var Tape::dropout(Var a, double rate, Rng& rng, bool train) {
  if (!train || rate <= 0.0) return a;
  if (rate >= 1.0) throw std::invalid_argument("dropout: rate must be < 1");
  const Tensor& va = value(a);
  Tensor keep(va.shape());
  const real scale = real(1.0 / (1.0 - rate));
  for (std::size_t i = 0; i < keep.size(); ++i)
    keep[i] = rng.bernoulli(rate) ? real(0) : scale;
  Tensor out = va;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= keep[i];
  const int ia = a.id;
  Var o = push(std::move(out), nullptr);
  const int io = o.id;
  nodes_[std::size_t(io)].back = [ia, io, keep = std::move(keep)](Tape& t) {
    const Tensor& go = t.g(io);
    Tensor& ga = t.g(ia);
    for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * keep[i];
  };
  return o;
}

Var Tape::bce_mean(Var probs, Tensor labels, Tensor mask) {
  const Tensor& p = value(probs);
  const real loss = num::bce_loss(p, labels, mask);  // validates and counts
  std::size_t count = 0;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i] != real(0)) ++count;
  const int ip = probs.id;
  Var o = push(Tensor::scalar(loss), nullptr);
  const int io = o.id;
  nodes_[std::size_t(io)].back = [ip, io, labels = std::move(labels), mask = std::move(mask),
                                  count](Tape& t) {
    const real go = t.g(io)[0];
    const Tensor& p = t.val(ip);
    Tensor& gp = t.g(ip);
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (mask[i] == real(0)) continue;
      if (p[i] <= kProbClamp || p[i] >= real(1) - kProbClamp) continue;  // clamp region
      gp[i] += go * (p[i] - labels[i]) / (p[i] * (real(1) - p[i]) * real(count));
    }
  };
  return o;
}

}  // namespace kt::num
