// Copyright 2026 The HieRec-cpp Authors. All Rights Reserved.
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

// A small reverse-mode tape over dense matrices.
//
// A Graph records the forward computation of one training sample (or one
// inference call). Parameters are referenced, never copied; their gradients
// are collected inside the graph and read back with ForEachParamGrad /
// ForEachSparseGrad, so forward and backward passes never mutate model
// parameters and independent graphs can run on different threads.

#ifndef HIEREC_AUTODIFF_H_
#define HIEREC_AUTODIFF_H_

#include <functional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "hierec/tensor.h"

namespace hierec {

struct Parameter {
  std::string name;
  Matrix value;
  bool trainable = true;
};

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

class Graph {
 public:
  // With `record_gradients` false no backward closures are kept.
  explicit Graph(bool record_gradients = true);

  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var Input(Matrix value);
  // Repeated calls with the same parameter return the same node.
  Var Param(const Parameter& p);
  // Rows of an embedding table; gradient is kept sparse.
  Var Gather(const Parameter& table, std::span<const int> rows);

  Var MatMul(Var a, Var b);
  // x (L x n) + bias (1 x n) broadcast over rows.
  Var AddRowBias(Var x, Var bias);
  Var Add(Var a, Var b);
  Var Scale(Var a, Real c);
  Var Tanh(Var x);
  Var ConcatCols(Var a, Var b);
  // Stacks 1 x d rows into an n x d matrix.
  Var StackRows(std::span<const Var> rows);
  // 1 x 1 inner product of two 1 x d rows.
  Var DotProduct(Var a, Var b);

  // out (1 x d) = sum_i softmax(scores)_i * values.row(i) over unmasked rows.
  // `scores` is L x 1. An empty mask means every row is active. The weights
  // are exposed through aux().
  Var SoftmaxPool(Var scores, Var values, std::span<const bool> mask = {});

  // Scaled dot-product attention with `heads` heads over L x (heads * dh)
  // projections. Masked rows are neither attended to nor produce output.
  // Throws std::invalid_argument if every position is masked.
  Var MultiHeadAttention(Var q, Var k, Var v, int heads,
                         std::span<const bool> mask, Real scale);

  // Inverted dropout. rate == 0 returns x unchanged.
  Var Dropout(Var x, Real rate, std::mt19937_64& rng);

  // -log softmax(logits)[target] for an n x 1 (or 1 x n) logit vector.
  // Throws std::domain_error on non-finite logits.
  Var SoftmaxCrossEntropy(Var logits, int target);

  const Matrix& value(Var v) const;
  // Gradient of the last Backward() root w.r.t. v; empty if v did not
  // influence the root.
  const Matrix& grad(Var v) const;
  // Op-specific side output (attention weights, softmax probabilities).
  const Matrix& aux(Var v) const;
  Real scalar(Var v) const { return value(v)(0, 0); }

  void Backward(Var root, Real seed = 1.0);

  // f(const Parameter&, const Matrix& grad) for every dense parameter node
  // that received gradient.
  void ForEachParamGrad(
      const std::function<void(const Parameter&, const Matrix&)>& f) const;
  // f(const Parameter&, std::span<const int> rows, const Matrix& grad) for
  // every gather node that received gradient.
  void ForEachSparseGrad(
      const std::function<void(const Parameter&, std::span<const int>,
                                const Matrix&)>& f) const;

  size_t num_nodes() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Matrix aux;
    const Parameter* param = nullptr;
    std::vector<int> rows;  // gather indices
    bool needs_grad = false;
    bool is_gather = false;
    std::function<void()> backward;
  };

  Var Push(Node node);
  Node& node(Var v) { return nodes_[v.id]; }
  const Node& node(Var v) const { return nodes_[v.id]; }
  bool NeedsGrad(Var v) const { return node(v).needs_grad; }
  // Lazily zero-initialized gradient buffer of v.
  Matrix& GradOf(Var v);

  bool record_;
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_nodes_;
};

}  // namespace hierec

#endif  // HIEREC_AUTODIFF_H_
