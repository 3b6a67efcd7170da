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

#include "hierec/autodiff.h"

#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "hierec/kernels.h"

namespace hierec {

using kernels::Transpose;

Graph::Graph(bool record_gradients) : record_(record_gradients) {
  nodes_.reserve(256);
}

Var Graph::Push(Node n) {
  if (!record_) {
    n.needs_grad = false;
    n.backward = nullptr;
  }
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Matrix& Graph::GradOf(Var v) {
  Node& n = node(v);
  if (n.grad.empty()) {
    const Matrix& val = value(v);
    n.grad = Matrix(val.rows(), val.cols());
  }
  return n.grad;
}

const Matrix& Graph::value(Var v) const {
  const Node& n = node(v);
  return n.param != nullptr && !n.is_gather ? n.param->value : n.value;
}

const Matrix& Graph::grad(Var v) const { return node(v).grad; }
const Matrix& Graph::aux(Var v) const { return node(v).aux; }

Var Graph::Input(Matrix value) {
  Node n;
  n.value = std::move(value);
  return Push(std::move(n));
}

Var Graph::Param(const Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) {
    return Var{it->second};
  }
  Node n;
  n.param = &p;
  n.needs_grad = p.trainable;
  Var v = Push(std::move(n));
  param_nodes_.emplace(&p, v.id);
  return v;
}

Var Graph::Gather(const Parameter& table, std::span<const int> rows) {
  Node n;
  n.param = &table;
  n.is_gather = true;
  n.rows.assign(rows.begin(), rows.end());
  n.value = Matrix(static_cast<int>(rows.size()), table.value.cols());
  for (size_t i = 0; i < rows.size(); ++i) {
    assert(rows[i] >= 0 && rows[i] < table.value.rows());
    std::span<const Real> src = table.value.row(rows[i]);
    std::copy(src.begin(), src.end(), n.value.row(static_cast<int>(i)).begin());
  }
  n.needs_grad = table.trainable;
  return Push(std::move(n));
}

Var Graph::MatMul(Var a, Var b) {
  Node n;
  kernels::Gemm(Transpose::kNo, Transpose::kNo, value(a), value(b), &n.value,
                false);
  n.needs_grad = NeedsGrad(a) || NeedsGrad(b);
  Var out = Push(std::move(n));
  if (node(out).needs_grad) {
    node(out).backward = [this, a, b, out] {
      const Matrix& g = node(out).grad;
      if (NeedsGrad(a)) {
        kernels::Gemm(Transpose::kNo, Transpose::kYes, g, value(b), &GradOf(a),
                      true);
      }
      if (NeedsGrad(b)) {
        kernels::Gemm(Transpose::kYes, Transpose::kNo, value(a), g, &GradOf(b),
                      true);
      }
    };
  }
  return out;
}

Var Graph::AddRowBias(Var x, Var bias) {
  const Matrix& xv = value(x);
  const Matrix& bv = value(bias);
  assert(bv.rows() == 1 && bv.cols() == xv.cols());
  Node n;
  n.value = xv;
  for (int r = 0; r < xv.rows(); ++r) {
    std::span<Real> row = n.value.row(r);
    for (int c = 0; c < xv.cols(); ++c) row[c] += bv(0, c);
  }
  n.needs_grad = NeedsGrad(x) || NeedsGrad(bias);
  Var out = Push(std::move(n));
  if (node(out).needs_grad) {
    node(out).backward = [this, x, bias, out] {
      const Matrix& g = node(out).grad;
      if (NeedsGrad(x)) {
        Matrix& gx = GradOf(x);
        for (size_t i = 0; i < g.size(); ++i) gx.data()[i] += g.data()[i];
      }
      if (NeedsGrad(bias)) {
        Matrix& gb = GradOf(bias);
        for (int r = 0; r < g.rows(); ++r) {
          for (int c = 0; c < g.cols(); ++c) gb(0, c) += g(r, c);
        }
      }
    };
  }
  return out;
}

Var Graph::Add(Var a, Var b) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  assert(av.SameShape(bv));
  Node n;
  n.value = av;
  for (size_t i = 0; i < bv.size(); ++i) n.value.data()[i] += bv.data()[i];
  n.needs_grad = NeedsGrad(a) || NeedsGrad(b);
  Var out = Push(std::move(n));
  if (node(out).needs_grad) {
    node(out).backward = [this, a, b, out] {
      const Matrix& g = node(out).grad;
      for (Var in : {a, b}) {
        if (!NeedsGrad(in)) continue;
        Matrix& gi = GradOf(in);
        for (size_t i = 0; i < g.size(); ++i) gi.data()[i] += g.data()[i];
      }
    };
  }
  return out;
}

Var Graph::Scale(Var a, Real c) {
  Node n;
  n.value = value(a);
  for (Real& x : n.value.data()) x *= c;
  n.needs_grad = NeedsGrad(a);
  Var out = Push(std::move(n));
  if (node(out).needs_grad) {
    node(out).backward = [this, a, c, out] {
      const Matrix& g = node(out).grad;
      Matrix& ga = GradOf(a);
      for (size_t i = 0; i < g.size(); ++i) ga.data()[i] += c * g.data()[i];
    };
  }
  return out;
}

Var Graph::Tanh(Var x) {
  Node n;
  n.value = value(x);
  for (Real& v : n.value.data()) v = std::tanh(v);
  n.needs_grad = NeedsGrad(x);
  Var out = Push(std::move(n));
  if (node(out).needs_grad) {
    node(out).backward = [this, x, out] {
      const Matrix& g = node(out).grad;
      const Matrix& y = node(out).value;
      Matrix& gx = GradOf(x);
      for (size_t i = 0; i < g.size(); ++i) {
        gx.data()[i] += g.data()[i] * (1.0 - y.data()[i] * y.data()[i]);
      }
    };
  }
  return out;
}

Var Graph::ConcatCols(Var a, Var b) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  assert(av.rows() == bv.rows());
  Node n;
  n.value = Matrix(av.rows(), av.cols() + bv.cols());
  for (int r = 0; r < av.rows(); ++r) {
    std::span<Real> dst = n.value.row(r);
    std::copy(av.row(r).begin(), av.row(r).end(), dst.begin());
    std::copy(bv.row(r).begin(), bv.row(r).end(), dst.begin() + av.cols());
  }
  n.needs_grad = NeedsGrad(a) || NeedsGrad(b);
  Var out = Push(std::move(n));
  if (node(out).needs_grad) {
    node(out).backward = [this, a, b, out] {
      const Matrix& g = node(out).grad;
      const int ca = value(a).cols();
      const int cb = value(b).cols();
      for (int r = 0; r < g.rows(); ++r) {
        if (NeedsGrad(a)) {
          Matrix& ga = GradOf(a);
          for (int c = 0; c < ca; ++c) ga(r, c) += g(r, c);
        }
        if (NeedsGrad(b)) {
          Matrix& gb = GradOf(b);
          for (int c = 0; c < cb; ++c) gb(r, c) += g(r, ca + c);
        }
      }
    };
  }
  return out;
}

Var Graph::StackRows(std::span<const Var> rows) {
  assert(!rows.empty());
  const int d = value(rows[0]).cols();
  Node n;
  n.value = Matrix(static_cast<int>(rows.size()), d);
  bool any = false;
  for (size_t i = 0; i < rows.size(); ++i) {
    const Matrix& r = value(rows[i]);
    assert(r.rows() == 1 && r.cols() == d);
    std::copy(r.row(0).begin(), r.row(0).end(),
              n.value.row(static_cast<int>(i)).begin());
    any = any || NeedsGrad(rows[i]);
  }
  n.needs_grad = any;
  Var out = Push(std::move(n));
  if (node(out).needs_grad) {
    std::vector<Var> inputs(rows.begin(), rows.end());
    node(out).backward = [this, inputs = std::move(inputs), out] {
      const Matrix& g = node(out).grad;
      for (size_t i = 0; i < inputs.size(); ++i) {
        if (!NeedsGrad(inputs[i])) continue;
        Matrix& gi = GradOf(inputs[i]);
        std::span<const Real> src = g.row(static_cast<int>(i));
        for (int c = 0; c < g.cols(); ++c) gi(0, c) += src[c];
      }
    };
  }
  return out;
}

Var Graph::DotProduct(Var a, Var b) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  assert(av.SameShape(bv) && av.rows() == 1);
  Node n;
  n.value = Matrix(1, 1, Dot(av.data(), bv.data()));
  n.needs_grad = NeedsGrad(a) || NeedsGrad(b);
  Var out = Push(std::move(n));
  if (node(out).needs_grad) {
    node(out).backward = [this, a, b, out] {
      const Real g = node(out).grad(0, 0);
      if (NeedsGrad(a)) {
        Matrix& ga = GradOf(a);
        const Matrix& bv = value(b);
        for (size_t i = 0; i < bv.size(); ++i) ga.data()[i] += g * bv.data()[i];
      }
      if (NeedsGrad(b)) {
        Matrix& gb = GradOf(b);
        const Matrix& av = value(a);
        for (size_t i = 0; i < av.size(); ++i) gb.data()[i] += g * av.data()[i];
      }
    };
  }
  return out;
}

Var Graph::SoftmaxPool(Var scores, Var values, std::span<const bool> mask) {
  const Matrix& s = value(scores);
  const Matrix& x = value(values);
  const int len = x.rows();
  assert(s.rows() == len && s.cols() == 1);
  assert(mask.empty() || static_cast<int>(mask.size()) == len);
  auto active = [&mask](int i) { return mask.empty() || mask[i]; };

  Real max_score = -std::numeric_limits<Real>::infinity();
  for (int i = 0; i < len; ++i) {
    if (active(i)) max_score = std::max(max_score, s(i, 0));
  }
  if (!std::isfinite(max_score)) {
    throw std::invalid_argument("SoftmaxPool: no active position");
  }
  Node n;
  n.aux = Matrix(len, 1);
  Real total = 0.0;
  for (int i = 0; i < len; ++i) {
    if (!active(i)) continue;
    n.aux(i, 0) = std::exp(s(i, 0) - max_score);
    total += n.aux(i, 0);
  }
  n.value = Matrix(1, x.cols());
  for (int i = 0; i < len; ++i) {
    if (!active(i)) continue;
    n.aux(i, 0) /= total;
    const Real w = n.aux(i, 0);
    std::span<const Real> xr = x.row(i);
    for (int c = 0; c < x.cols(); ++c) n.value(0, c) += w * xr[c];
  }
  n.needs_grad = NeedsGrad(scores) || NeedsGrad(values);
  Var out = Push(std::move(n));
  if (node(out).needs_grad) {
    node(out).backward = [this, scores, values, out] {
      const Matrix& g = node(out).grad;
      const Matrix& w = node(out).aux;
      const Matrix& y = node(out).value;
      const Matrix& xv = value(values);
      const Real g_dot_y = Dot(g.row(0), y.row(0));
      for (int i = 0; i < xv.rows(); ++i) {
        const Real wi = w(i, 0);
        if (wi == 0.0) continue;
        if (NeedsGrad(values)) {
          std::span<Real> gx = GradOf(values).row(i);
          for (int c = 0; c < xv.cols(); ++c) gx[c] += wi * g(0, c);
        }
        if (NeedsGrad(scores)) {
          GradOf(scores)(i, 0) += wi * (Dot(g.row(0), xv.row(i)) - g_dot_y);
        }
      }
    };
  }
  return out;
}

Var Graph::MultiHeadAttention(Var q, Var k, Var v, int heads,
                              std::span<const bool> mask, Real scale) {
  const Matrix& qv = value(q);
  const Matrix& kv = value(k);
  const Matrix& vv = value(v);
  const int len = qv.rows();
  assert(kv.rows() == len && vv.rows() == len);
  assert(qv.cols() == kv.cols() && qv.cols() % heads == 0);
  assert(vv.cols() % heads == 0);
  assert(mask.empty() || static_cast<int>(mask.size()) == len);
  const int dk = qv.cols() / heads;
  const int dv = vv.cols() / heads;

  std::vector<char> active(len, 1);
  bool any = false;
  for (int i = 0; i < len; ++i) {
    active[i] = mask.empty() || mask[i];
    any = any || active[i];
  }
  if (!any) {
    throw std::invalid_argument("MultiHeadAttention: all positions masked");
  }

  Node n;
  n.value = Matrix(len, vv.cols());
  n.aux = Matrix(heads * len, len);  // attention probabilities per head
  for (int h = 0; h < heads; ++h) {
    for (int i = 0; i < len; ++i) {
      if (!active[i]) continue;
      std::span<Real> p = n.aux.row(h * len + i);
      Real max_logit = -std::numeric_limits<Real>::infinity();
      for (int j = 0; j < len; ++j) {
        if (!active[j]) continue;
        Real dot = 0.0;
        for (int c = 0; c < dk; ++c) dot += qv(i, h * dk + c) * kv(j, h * dk + c);
        p[j] = dot * scale;
        max_logit = std::max(max_logit, p[j]);
      }
      Real total = 0.0;
      for (int j = 0; j < len; ++j) {
        if (!active[j]) continue;
        p[j] = std::exp(p[j] - max_logit);
        total += p[j];
      }
      for (int j = 0; j < len; ++j) {
        if (!active[j]) continue;
        p[j] /= total;
        for (int c = 0; c < dv; ++c) {
          n.value(i, h * dv + c) += p[j] * vv(j, h * dv + c);
        }
      }
    }
  }
  n.needs_grad = NeedsGrad(q) || NeedsGrad(k) || NeedsGrad(v);
  Var out = Push(std::move(n));
  if (node(out).needs_grad) {
    node(out).backward = [this, q, k, v, heads, scale, dk, dv, out,
                          active = std::move(active)] {
      const Matrix& g = node(out).grad;
      const Matrix& probs = node(out).aux;
      const Matrix& qv = value(q);
      const Matrix& kv = value(k);
      const Matrix& vv = value(v);
      const int len = qv.rows();
      Matrix* gq = NeedsGrad(q) ? &GradOf(q) : nullptr;
      Matrix* gk = NeedsGrad(k) ? &GradOf(k) : nullptr;
      Matrix* gv = NeedsGrad(v) ? &GradOf(v) : nullptr;
      std::vector<Real> dp(len);
      for (int h = 0; h < heads; ++h) {
        for (int i = 0; i < len; ++i) {
          if (!active[i]) continue;
          std::span<const Real> p = probs.row(h * len + i);
          // dP_ij = g_i . v_j ; dS_ij = P_ij (dP_ij - sum_k P_ik dP_ik)
          Real weighted = 0.0;
          for (int j = 0; j < len; ++j) {
            if (!active[j]) continue;
            Real d = 0.0;
            for (int c = 0; c < dv; ++c) d += g(i, h * dv + c) * vv(j, h * dv + c);
            dp[j] = d;
            weighted += p[j] * d;
            if (gv != nullptr) {
              for (int c = 0; c < dv; ++c) {
                (*gv)(j, h * dv + c) += p[j] * g(i, h * dv + c);
              }
            }
          }
          for (int j = 0; j < len; ++j) {
            if (!active[j]) continue;
            const Real ds = p[j] * (dp[j] - weighted) * scale;
            if (ds == 0.0) continue;
            for (int c = 0; c < dk; ++c) {
              if (gq != nullptr) (*gq)(i, h * dk + c) += ds * kv(j, h * dk + c);
              if (gk != nullptr) (*gk)(j, h * dk + c) += ds * qv(i, h * dk + c);
            }
          }
        }
      }
    };
  }
  return out;
}

Var Graph::Dropout(Var x, Real rate, std::mt19937_64& rng) {
  if (rate <= 0.0) return x;
  assert(rate < 1.0);
  const Matrix& xv = value(x);
  Node n;
  n.aux = Matrix(xv.rows(), xv.cols());
  n.value = xv;
  std::bernoulli_distribution keep(1.0 - rate);
  const Real inv = 1.0 / (1.0 - rate);
  for (size_t i = 0; i < xv.size(); ++i) {
    n.aux.data()[i] = keep(rng) ? inv : 0.0;
    n.value.data()[i] *= n.aux.data()[i];
  }
  n.needs_grad = NeedsGrad(x);
  Var out = Push(std::move(n));
  if (node(out).needs_grad) {
    node(out).backward = [this, x, out] {
      const Matrix& g = node(out).grad;
      const Matrix& m = node(out).aux;
      Matrix& gx = GradOf(x);
      for (size_t i = 0; i < g.size(); ++i) gx.data()[i] += g.data()[i] * m.data()[i];
    };
  }
  return out;
}

Var Graph::SoftmaxCrossEntropy(Var logits, int target) {
  const Matrix& lv = value(logits);
  const int n_logits = static_cast<int>(lv.size());
  assert(lv.rows() == 1 || lv.cols() == 1);
  assert(target >= 0 && target < n_logits);
  Real max_logit = -std::numeric_limits<Real>::infinity();
  for (Real x : lv.data()) {
    if (!std::isfinite(x)) {
      throw std::domain_error("SoftmaxCrossEntropy: non-finite logit");
    }
    max_logit = std::max(max_logit, x);
  }
  Node n;
  n.aux = Matrix(lv.rows(), lv.cols());
  Real total = 0.0;
  Real others = 0.0;  // mass of the non-target logits
  for (int i = 0; i < n_logits; ++i) {
    n.aux.data()[i] = std::exp(lv.data()[i] - max_logit);
    total += n.aux.data()[i];
    if (i != target) others += n.aux.data()[i];
  }
  for (Real& p : n.aux.data()) p /= total;
  // log1p keeps tiny losses of a dominant target from rounding to zero.
  const Real loss = lv.data()[target] == max_logit
                        ? std::log1p(others)
                        : std::log(total) + max_logit - lv.data()[target];
  n.value = Matrix(1, 1, loss);
  n.needs_grad = NeedsGrad(logits);
  Var out = Push(std::move(n));
  if (node(out).needs_grad) {
    node(out).backward = [this, logits, target, out] {
      const Real g = node(out).grad(0, 0);
      const Matrix& p = node(out).aux;
      Matrix& gl = GradOf(logits);
      for (size_t i = 0; i < p.size(); ++i) {
        gl.data()[i] += g * (p.data()[i] - (static_cast<int>(i) == target ? 1.0 : 0.0));
      }
    };
  }
  return out;
}

void Graph::Backward(Var root, Real seed) {
  assert(record_);
  for (Node& n : nodes_) n.grad = Matrix();
  const Matrix& rv = value(root);
  if (!node(root).needs_grad) return;
  node(root).grad = Matrix(rv.rows(), rv.cols(), seed);
  for (int id = root.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.needs_grad || n.grad.empty() || !n.backward) continue;
    n.backward();
  }
}

void Graph::ForEachParamGrad(
    const std::function<void(const Parameter&, const Matrix&)>& f) const {
  for (const auto& [param, id] : param_nodes_) {
    const Node& n = nodes_[id];
    if (!n.grad.empty()) f(*param, n.grad);
  }
}

void Graph::ForEachSparseGrad(
    const std::function<void(const Parameter&, std::span<const int>,
                             const Matrix&)>& f) const {
  for (const Node& n : nodes_) {
    if (n.is_gather && !n.grad.empty()) f(*n.param, n.rows, n.grad);
  }
}

}  // namespace hierec
