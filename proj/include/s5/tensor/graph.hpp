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

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "s5/tensor/tensor.hpp"

namespace s5 {

/// Handle to a node of a Graph.
struct Var {
  std::uint32_t id = UINT32_MAX;
  bool valid() const { return id != UINT32_MAX; }
};

enum class OpKind {
  Input,
  Param,
  MatMul,
  MatMulNT,
  Add,
  AddRow,
  Scale,
  Relu,
  SoftmaxRows,
  LayerNorm,
  Concat,
  SliceCols,
  Gather,
  CrossEntropy,
  Sum,
};

/// Append-only tape of operations, rebuilt for every forward pass.
///
/// Nodes are stored in creation order, so every input precedes its consumer.
/// Parameters are bound by reference; backward() accumulates into the bound
/// tensor's gradient buffer. A graph built with recording off computes values
/// only and refuses backward().
class Graph {
 public:
  explicit Graph(bool record = true) : record_(record) {}

  bool recording() const { return record_; }
  std::size_t size() const { return nodes_.size(); }
  OpKind kind(Var v) const { return nodes_.at(v.id).kind; }
  std::span<const std::uint32_t> inputs(Var v) const { return nodes_.at(v.id).inputs; }

  Var input(Tensor value);
  /// Binds a parameter. Binding the same tensor twice returns the same node.
  Var param(Tensor& p);

  const Tensor& value(Var v) const;
  /// Gradient of the last backward() with respect to this node; empty when
  /// the node received none.
  std::span<const double> grad(Var v) const { return nodes_.at(v.id).grad; }

  // c = a * b for a[m x k], b[k x n]
  Var matmul(Var a, Var b);
  // c = a * b^T for a[m x k], b[n x k]
  Var matmul_nt(Var a, Var b);
  Var add(Var a, Var b);
  // x[n x d] + row vector b[d] broadcast over rows
  Var add_row(Var x, Var b);
  Var scale(Var x, double s);
  Var relu(Var x);
  Var softmax_rows(Var x);
  Var layer_norm(Var x, Var gain, Var bias, double eps);
  Var concat_channels(Var a, Var b);
  Var concat_channels(std::span<const Var> parts);
  Var slice_cols(Var x, std::size_t start, std::size_t width);
  /// out.flat[i] = x.flat[index[i]]; backward scatters.
  Var gather(Var x, std::vector<std::uint32_t> index, Shape out_shape);
  /// Mean over masked-in rows of -log softmax(logits)[label]; 0 when no row
  /// is masked in. Labels of masked-out rows are not inspected.
  Var cross_entropy_masked(Var logits, std::span<const std::uint16_t> labels,
                           std::span<const std::uint8_t> mask);
  Var sum(Var x);

  /// Reverse sweep from a one-element node, seeding its gradient with `seed`.
  void backward(Var loss, double seed = 1.0);
  void reset();

 private:
  struct Node {
    OpKind kind;
    std::vector<std::uint32_t> inputs;
    Tensor own;
    Tensor* param = nullptr;
    std::vector<double> grad;
    bool needs_grad = false;
    std::function<void(Graph&, std::uint32_t)> back;
  };

  Var push(OpKind kind, std::vector<std::uint32_t> inputs, Tensor value);
  bool needs(std::uint32_t id) const { return nodes_[id].needs_grad; }
  std::vector<double>& grad_buf(std::uint32_t id);
  const Tensor& val(std::uint32_t id) const;

  bool record_;
  bool backward_done_ = false;
  std::vector<Node> nodes_;
  std::unordered_map<const Tensor*, std::uint32_t> bound_;
};

}  // namespace s5
