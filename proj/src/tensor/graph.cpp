// Copyright 2026 The S5 Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "s5/tensor/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "s5/simd/kernels.hpp"
#include "s5/util/error.hpp"

namespace s5 {
namespace {

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_str(t.shape()));
  }
}

}  // namespace

Var Graph::push(OpKind kind, std::vector<std::uint32_t> inputs, Tensor value) {
  Node n;
  n.kind = kind;
  n.inputs = std::move(inputs);
  n.own = std::move(value);
  if (record_) {
    for (std::uint32_t in : n.inputs) n.needs_grad = n.needs_grad || nodes_[in].needs_grad;
  }
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

const Tensor& Graph::val(std::uint32_t id) const {
  const Node& n = nodes_[id];
  return n.param ? *n.param : n.own;
}

const Tensor& Graph::value(Var v) const {
  if (v.id >= nodes_.size()) throw IndexError("graph has no node " + std::to_string(v.id));
  return val(v.id);
}

std::vector<double>& Graph::grad_buf(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad.assign(val(id).numel(), 0.0);
  return n.grad;
}

Var Graph::input(Tensor value) { return push(OpKind::Input, {}, std::move(value)); }

Var Graph::param(Tensor& p) {
  if (auto it = bound_.find(&p); it != bound_.end()) return Var{it->second};
  Node n;
  n.kind = OpKind::Param;
  n.param = &p;
  n.needs_grad = record_;
  nodes_.push_back(std::move(n));
  const auto id = static_cast<std::uint32_t>(nodes_.size() - 1);
  bound_.emplace(&p, id);
  return Var{id};
}

Var Graph::matmul(Var a, Var b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  require_rank2(ta, "matmul");
  require_rank2(tb, "matmul");
  if (ta.dim(1) != tb.dim(0)) {
    throw DimensionError("matmul: inner extents differ, " + shape_str(ta.shape()) + " x " +
                         shape_str(tb.shape()));
  }
  const std::size_t m = ta.dim(0), k = ta.dim(1), n = tb.dim(1);
  Tensor out({m, n});
  simd::kernels().gemm_nn(m, k, n, ta.data(), tb.data(), out.data(), false);
  Var r = push(OpKind::MatMul, {a.id, b.id}, std::move(out));
  if (needs(r.id)) {
    nodes_[r.id].back = [m, k, n](Graph& g, std::uint32_t self) {
      const auto& node = g.nodes_[self];
      const std::uint32_t ia = node.inputs[0], ib = node.inputs[1];
      const double* gc = node.grad.data();
      const auto& ks = simd::kernels();
      if (g.needs(ia)) ks.gemm_nt(m, n, k, gc, g.val(ib).data(), g.grad_buf(ia).data(), true);
      if (g.needs(ib)) ks.gemm_tn(k, m, n, g.val(ia).data(), gc, g.grad_buf(ib).data(), true);
    };
  }
  return r;
}

Var Graph::matmul_nt(Var a, Var b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  require_rank2(ta, "matmul_nt");
  require_rank2(tb, "matmul_nt");
  if (ta.dim(1) != tb.dim(1)) {
    throw DimensionError("matmul_nt: inner extents differ, " + shape_str(ta.shape()) +
                         " x " + shape_str(tb.shape()) + "^T");
  }
  const std::size_t m = ta.dim(0), k = ta.dim(1), n = tb.dim(0);
  Tensor out({m, n});
  simd::kernels().gemm_nt(m, k, n, ta.data(), tb.data(), out.data(), false);
  Var r = push(OpKind::MatMulNT, {a.id, b.id}, std::move(out));
  if (needs(r.id)) {
    nodes_[r.id].back = [m, k, n](Graph& g, std::uint32_t self) {
      const auto& node = g.nodes_[self];
      const std::uint32_t ia = node.inputs[0], ib = node.inputs[1];
      const double* gc = node.grad.data();
      const auto& ks = simd::kernels();
      if (g.needs(ia)) ks.gemm_nn(m, n, k, gc, g.val(ib).data(), g.grad_buf(ia).data(), true);
      if (g.needs(ib)) ks.gemm_tn(n, m, k, gc, g.val(ia).data(), g.grad_buf(ib).data(), true);
    };
  }
  return r;
}

Var Graph::add(Var a, Var b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (ta.shape() != tb.shape()) {
    throw DimensionError("add: shapes differ, " + shape_str(ta.shape()) + " vs " +
                         shape_str(tb.shape()));
  }
  Tensor out(ta.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = ta[i] + tb[i];
  Var r = push(OpKind::Add, {a.id, b.id}, std::move(out));
  if (needs(r.id)) {
    nodes_[r.id].back = [](Graph& g, std::uint32_t self) {
      for (std::uint32_t in : {g.nodes_[self].inputs[0], g.nodes_[self].inputs[1]}) {
        if (!g.needs(in)) continue;
        auto& gi = g.grad_buf(in);
        const auto& go = g.nodes_[self].grad;
        for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += go[i];
      }
    };
  }
  return r;
}

Var Graph::add_row(Var x, Var b) {
  const Tensor& tx = value(x);
  const Tensor& tb = value(b);
  require_rank2(tx, "add_row");
  if (tb.numel() != tx.dim(1)) {
    throw DimensionError("add_row: bias " + shape_str(tb.shape()) + " does not match rows of " +
                         shape_str(tx.shape()));
  }
  const std::size_t n = tx.dim(0), d = tx.dim(1);
  Tensor out(tx.shape());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] = tx[i * d + j] + tb[j];
  Var r = push(OpKind::AddRow, {x.id, b.id}, std::move(out));
  if (needs(r.id)) {
    nodes_[r.id].back = [n, d](Graph& g, std::uint32_t self) {
      const std::uint32_t ix = g.nodes_[self].inputs[0], ib = g.nodes_[self].inputs[1];
      const auto& go = g.nodes_[self].grad;
      if (g.needs(ix)) {
        auto& gx = g.grad_buf(ix);
        for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i];
      }
      if (g.needs(ib)) {
        auto& gb = g.grad_buf(ib);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < d; ++j) gb[j] += go[i * d + j];
      }
    };
  }
  return r;
}

Var Graph::scale(Var x, double s) {
  const Tensor& tx = value(x);
  Tensor out(tx.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = tx[i] * s;
  Var r = push(OpKind::Scale, {x.id}, std::move(out));
  if (needs(r.id)) {
    nodes_[r.id].back = [s](Graph& g, std::uint32_t self) {
      auto& gx = g.grad_buf(g.nodes_[self].inputs[0]);
      const auto& go = g.nodes_[self].grad;
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += s * go[i];
    };
  }
  return r;
}

Var Graph::relu(Var x) {
  const Tensor& tx = value(x);
  Tensor out(tx.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = tx[i] > 0.0 ? tx[i] : 0.0;
  Var r = push(OpKind::Relu, {x.id}, std::move(out));
  if (needs(r.id)) {
    nodes_[r.id].back = [](Graph& g, std::uint32_t self) {
      const std::uint32_t ix = g.nodes_[self].inputs[0];
      const Tensor& xv = g.val(ix);
      auto& gx = g.grad_buf(ix);
      const auto& go = g.nodes_[self].grad;
      for (std::size_t i = 0; i < gx.size(); ++i)
        if (xv[i] > 0.0) gx[i] += go[i];
    };
  }
  return r;
}

Var Graph::softmax_rows(Var x) {
  const Tensor& tx = value(x);
  require_rank2(tx, "softmax_rows");
  const std::size_t n = tx.dim(0), k = tx.dim(1);
  if (k == 0) throw DimensionError("softmax_rows: rows must have at least one entry");
  Tensor out(tx.shape());
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = tx.data() + i * k;
    double* yi = out.data() + i * k;
    const double mx = *std::max_element(xi, xi + k);
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      yi[j] = std::exp(xi[j] - mx);
      s += yi[j];
    }
    for (std::size_t j = 0; j < k; ++j) yi[j] /= s;
  }
  Var r = push(OpKind::SoftmaxRows, {x.id}, std::move(out));
  if (needs(r.id)) {
    nodes_[r.id].back = [n, k](Graph& g, std::uint32_t self) {
      const Tensor& y = g.nodes_[self].own;
      const auto& go = g.nodes_[self].grad;
      auto& gx = g.grad_buf(g.nodes_[self].inputs[0]);
      for (std::size_t i = 0; i < n; ++i) {
        double dotv = 0.0;
        for (std::size_t j = 0; j < k; ++j) dotv += go[i * k + j] * y[i * k + j];
        for (std::size_t j = 0; j < k; ++j) gx[i * k + j] += y[i * k + j] * (go[i * k + j] - dotv);
      }
    };
  }
  return r;
}

Var Graph::layer_norm(Var x, Var gain, Var bias, double eps) {
  if (!(eps > 0.0)) throw ValidationError("layer_norm: eps must be positive");
  const Tensor& tx = value(x);
  require_rank2(tx, "layer_norm");
  const std::size_t n = tx.dim(0), d = tx.dim(1);
  if (value(gain).numel() != d || value(bias).numel() != d) {
    throw DimensionError("layer_norm: gain/bias do not match width of " + shape_str(tx.shape()));
  }
  const Tensor& tg = value(gain);
  const Tensor& tb = value(bias);
  Tensor out(tx.shape());
  std::vector<double> xhat(n * d), rstd(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = tx.data() + i * d;
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += xi[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (xi[j] - mean) * (xi[j] - mean);
    var /= static_cast<double>(d);
    rstd[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) {
      xhat[i * d + j] = (xi[j] - mean) * rstd[i];
      out[i * d + j] = xhat[i * d + j] * tg[j] + tb[j];
    }
  }
  Var r = push(OpKind::LayerNorm, {x.id, gain.id, bias.id}, std::move(out));
  if (needs(r.id)) {
    nodes_[r.id].back = [n, d, xhat = std::move(xhat), rstd = std::move(rstd)](
                            Graph& g, std::uint32_t self) {
      const auto ins = g.nodes_[self].inputs;
      const auto& go = g.nodes_[self].grad;
      const Tensor& tg = g.val(ins[1]);
      if (g.needs(ins[1])) {
        auto& gg = g.grad_buf(ins[1]);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < d; ++j) gg[j] += go[i * d + j] * xhat[i * d + j];
      }
      if (g.needs(ins[2])) {
        auto& gb = g.grad_buf(ins[2]);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < d; ++j) gb[j] += go[i * d + j];
      }
      if (g.needs(ins[0])) {
        auto& gx = g.grad_buf(ins[0]);
        const double inv_d = 1.0 / static_cast<double>(d);
        for (std::size_t i = 0; i < n; ++i) {
          double m1 = 0.0, m2 = 0.0;
          for (std::size_t j = 0; j < d; ++j) {
            const double gh = go[i * d + j] * tg[j];
            m1 += gh;
            m2 += gh * xhat[i * d + j];
          }
          m1 *= inv_d;
          m2 *= inv_d;
          for (std::size_t j = 0; j < d; ++j) {
            const double gh = go[i * d + j] * tg[j];
            gx[i * d + j] += rstd[i] * (gh - m1 - xhat[i * d + j] * m2);
          }
        }
      }
    };
  }
  return r;
}

Var Graph::concat_channels(Var a, Var b) {
  const Var parts[] = {a, b};
  return concat_channels(parts);
}

Var Graph::concat_channels(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_channels: no operands");
  const std::size_t n = value(parts[0]).dim(0);
  std::vector<std::size_t> widths;
  std::vector<std::uint32_t> ids;
  std::size_t total = 0;
  for (Var p : parts) {
    const Tensor& t = value(p);
    require_rank2(t, "concat_channels");
    if (t.dim(0) != n) {
      throw DimensionError("concat_channels: leading extents differ, " +
                           shape_str(value(parts[0]).shape()) + " vs " + shape_str(t.shape()));
    }
    widths.push_back(t.dim(1));
    ids.push_back(p.id);
    total += t.dim(1);
  }
  Tensor out({n, total});
  std::size_t off = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const Tensor& t = value(parts[p]);
    for (std::size_t i = 0; i < n; ++i)
      std::copy_n(t.data() + i * widths[p], widths[p], out.data() + i * total + off);
    off += widths[p];
  }
  Var r = push(OpKind::Concat, std::move(ids), std::move(out));
  if (needs(r.id)) {
    nodes_[r.id].back = [n, total, widths = std::move(widths)](Graph& g, std::uint32_t self) {
      const auto ins = g.nodes_[self].inputs;
      const auto& go = g.nodes_[self].grad;
      std::size_t off = 0;
      for (std::size_t p = 0; p < ins.size(); ++p) {
        if (g.needs(ins[p]) && widths[p] > 0) {
          auto& gi = g.grad_buf(ins[p]);
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < widths[p]; ++j)
              gi[i * widths[p] + j] += go[i * total + off + j];
        }
        off += widths[p];
      }
    };
  }
  return r;
}

Var Graph::slice_cols(Var x, std::size_t start, std::size_t width) {
  const Tensor& tx = value(x);
  require_rank2(tx, "slice_cols");
  const std::size_t n = tx.dim(0), d = tx.dim(1);
  if (start + width > d) {
    throw DimensionError("slice_cols: columns [" + std::to_string(start) + ", " +
                         std::to_string(start + width) + ") exceed " + shape_str(tx.shape()));
  }
  Tensor out({n, width});
  for (std::size_t i = 0; i < n; ++i)
    std::copy_n(tx.data() + i * d + start, width, out.data() + i * width);
  Var r = push(OpKind::SliceCols, {x.id}, std::move(out));
  if (needs(r.id)) {
    nodes_[r.id].back = [n, d, start, width](Graph& g, std::uint32_t self) {
      auto& gx = g.grad_buf(g.nodes_[self].inputs[0]);
      const auto& go = g.nodes_[self].grad;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < width; ++j) gx[i * d + start + j] += go[i * width + j];
    };
  }
  return r;
}

Var Graph::gather(Var x, std::vector<std::uint32_t> index, Shape out_shape) {
  const Tensor& tx = value(x);
  if (shape_numel(out_shape) != index.size()) {
    throw DimensionError("gather: " + std::to_string(index.size()) +
                         " indices do not fill " + shape_str(out_shape));
  }
  Tensor out(std::move(out_shape));
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= tx.numel()) throw IndexError("gather: index out of range");
    out[i] = tx[index[i]];
  }
  Var r = push(OpKind::Gather, {x.id}, std::move(out));
  if (needs(r.id)) {
    nodes_[r.id].back = [index = std::move(index)](Graph& g, std::uint32_t self) {
      auto& gx = g.grad_buf(g.nodes_[self].inputs[0]);
      const auto& go = g.nodes_[self].grad;
      for (std::size_t i = 0; i < index.size(); ++i) gx[index[i]] += go[i];
    };
  }
  return r;
}

Var Graph::cross_entropy_masked(Var logits, std::span<const std::uint16_t> labels,
                                std::span<const std::uint8_t> mask) {
  const Tensor& tl = value(logits);
  require_rank2(tl, "cross_entropy_masked");
  const std::size_t n = tl.dim(0), k = tl.dim(1);
  if (labels.size() != n || mask.size() != n) {
    throw DimensionError("cross_entropy_masked: " + std::to_string(labels.size()) +
                         " labels / " + std::to_string(mask.size()) + " mask entries for " +
                         shape_str(tl.shape()) + " logits");
  }
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    if (labels[i] >= k) {
      throw IndexError("cross_entropy_masked: label " + std::to_string(labels[i]) +
                       " outside [0, " + std::to_string(k) + ")");
    }
    ++count;
  }
  Tensor probs({n, k});
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    const double* li = tl.data() + i * k;
    double* pi = probs.data() + i * k;
    const double mx = *std::max_element(li, li + k);
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      pi[j] = std::exp(li[j] - mx);
      s += pi[j];
    }
    for (std::size_t j = 0; j < k; ++j) pi[j] /= s;
    total += (mx + std::log(s)) - li[labels[i]];
  }
  const double loss = count ? total / static_cast<double>(count) : 0.0;
  Var r = push(OpKind::CrossEntropy, {logits.id}, Tensor::scalar(loss));
  if (needs(r.id) && count > 0) {
    std::vector<std::uint16_t> lab(labels.begin(), labels.end());
    std::vector<std::uint8_t> msk(mask.begin(), mask.end());
    nodes_[r.id].back = [n, k, count, probs = std::move(probs), lab = std::move(lab),
                         msk = std::move(msk)](Graph& g, std::uint32_t self) {
      auto& gl = g.grad_buf(g.nodes_[self].inputs[0]);
      const double w = g.nodes_[self].grad[0] / static_cast<double>(count);
      for (std::size_t i = 0; i < n; ++i) {
        if (!msk[i]) continue;
        for (std::size_t j = 0; j < k; ++j) {
          const double target = j == lab[i] ? 1.0 : 0.0;
          gl[i * k + j] += w * (probs[i * k + j] - target);
        }
      }
    };
  }
  return r;
}

Var Graph::sum(Var x) {
  const Tensor& tx = value(x);
  double s = 0.0;
  for (std::size_t i = 0; i < tx.numel(); ++i) s += tx[i];
  Var r = push(OpKind::Sum, {x.id}, Tensor::scalar(s));
  if (needs(r.id)) {
    nodes_[r.id].back = [](Graph& g, std::uint32_t self) {
      auto& gx = g.grad_buf(g.nodes_[self].inputs[0]);
      const double go = g.nodes_[self].grad[0];
      for (double& v : gx) v += go;
    };
  }
  return r;
}

void Graph::backward(Var loss, double seed) {
  if (!record_) throw StateError("backward on a graph built without recording");
  if (backward_done_) throw StateError("backward already ran on this graph; reset it first");
  if (value(loss).numel() != 1) {
    throw DimensionError("backward needs a one-element loss, got " +
                         shape_str(value(loss).shape()));
  }
  backward_done_ = true;
  if (!needs(loss.id)) return;
  grad_buf(loss.id)[0] = seed;
  for (std::uint32_t id = loss.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.needs_grad || n.grad.empty()) continue;
    if (n.kind == OpKind::Param) {
      auto pg = n.param->ensure_grad();
      for (std::size_t i = 0; i < pg.size(); ++i) pg[i] += n.grad[i];
    } else if (n.back) {
      n.back(*this, id);
    }
  }
}

void Graph::reset() {
  nodes_.clear();
  bound_.clear();
  backward_done_ = false;
}

}  // namespace s5
