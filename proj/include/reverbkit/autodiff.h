// reverbkit/autodiff.h

// Copyright 2026  The reverbkit authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef REVERBKIT_AUTODIFF_H_
#define REVERBKIT_AUTODIFF_H_

// Reverse-mode differentiation on a dynamic tape.  A Graph owns the nodes
// of one forward computation; backward() replays the tape in reverse and
// flushes leaf gradients into the bound Params.  Graphs are single-threaded;
// parallelism lives inside the dense kernels.  The scalar type is a template
// parameter: training runs float, gradient checks run double.

#include <cmath>
#include <deque>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "reverbkit/common.h"
#include "reverbkit/kernels.h"

namespace reverbkit {
namespace ad {

template <class T>
struct Tensor {
  int rows = 0, cols = 0;
  std::vector<T> v;

  Tensor() = default;
  Tensor(int r, int c) : rows(r), cols(c), v(static_cast<size_t>(r) * c, T(0)) {}
  Tensor(int r, int c, std::vector<T> data)
      : rows(r), cols(c), v(std::move(data)) {}

  size_t numel() const { return static_cast<size_t>(rows) * cols; }
  T &at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
  T at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
  void fill(T x) { std::fill(v.begin(), v.end(), x); }

  template <class U>
  Tensor<U> cast() const {
    Tensor<U> out(rows, cols);
    for (size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<U>(v[i]);
    return out;
  }
};

template <class T>
struct Param {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;

  Param() = default;
  Param(std::string n, Tensor<T> val)
      : name(std::move(n)), value(std::move(val)),
        grad(value.rows, value.cols) {}
  void zero_grad() { grad.fill(T(0)); }
};

template <class T>
struct Node {
  Tensor<T> val;
  Tensor<T> grad;
  bool needs_grad = false;
};

template <class T>
class Graph {
 public:
  Graph() = default;
  Graph(const Graph &) = delete;
  Graph &operator=(const Graph &) = delete;

  // Data leaf; never receives gradient.
  Node<T> *input(Tensor<T> v) {
    Node<T> *n = new_node(v.rows, v.cols, false);
    n->val = std::move(v);
    return n;
  }

  // Parameter leaf; backward() adds its gradient into p.grad.
  Node<T> *leaf(Param<T> &p) {
    Node<T> *n = new_node(p.value.rows, p.value.cols, true);
    n->val = p.value;
    bound_.emplace_back(&p, n);
    return n;
  }

  // y = x * w + b with b broadcast over rows.  x: N x D, w: D x H, b: 1 x H.
  Node<T> *affine(Node<T> *x, Node<T> *w, Node<T> *b) {
    require(x->val.cols == w->val.rows && b->val.rows == 1 &&
                b->val.cols == w->val.cols,
            "affine: shape mismatch");
    int n = x->val.rows, d = x->val.cols, h = w->val.cols;
    Node<T> *y = new_node(n, h, x->needs_grad || w->needs_grad || b->needs_grad);
    kernels::matmul(x->val.v.data(), w->val.v.data(), y->val.v.data(), n, d, h,
                    false, false, false);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < h; ++c) y->val.at(r, c) += b->val.at(0, c);
    check_finite(y, "affine");
    if (y->needs_grad) {
      tape_.push_back([=]() {
        if (x->needs_grad)
          kernels::matmul(y->grad.v.data(), w->val.v.data(), x->grad.v.data(),
                          n, h, d, false, true, true);
        if (w->needs_grad)
          kernels::matmul(x->val.v.data(), y->grad.v.data(), w->grad.v.data(),
                          d, n, h, true, false, true);
        if (b->needs_grad)
          kernels::col_sum(y->grad.v.data(), b->grad.v.data(), n, h, true);
      });
    }
    return y;
  }

  Node<T> *relu(Node<T> *x) {
    return unary(x, "relu",
                 [](T v) { return v > T(0) ? v : T(0); },
                 [](T v, T /*y*/) { return v > T(0) ? T(1) : T(0); });
  }

  Node<T> *sigmoid(Node<T> *x) {
    return unary(x, "sigmoid",
                 [](T v) { return T(1) / (T(1) + std::exp(-v)); },
                 [](T /*v*/, T y) { return y * (T(1) - y); });
  }

  Node<T> *tanh(Node<T> *x) {
    return unary(x, "tanh", [](T v) { return std::tanh(v); },
                 [](T /*v*/, T y) { return T(1) - y * y; });
  }

  Node<T> *exp(Node<T> *x) {
    return unary(x, "exp", [](T v) { return std::exp(v); },
                 [](T /*v*/, T y) { return y; });
  }

  Node<T> *add(Node<T> *a, Node<T> *b) {
    return binary(a, b, "add", [](T x, T y) { return x + y; },
                  [](T, T, T) { return T(1); }, [](T, T, T) { return T(1); });
  }

  Node<T> *sub(Node<T> *a, Node<T> *b) {
    return binary(a, b, "sub", [](T x, T y) { return x - y; },
                  [](T, T, T) { return T(1); }, [](T, T, T) { return T(-1); });
  }

  // Elementwise (Hadamard) product.
  Node<T> *mul(Node<T> *a, Node<T> *b) {
    return binary(a, b, "mul", [](T x, T y) { return x * y; },
                  [](T, T y, T) { return y; }, [](T x, T, T) { return x; });
  }

  Node<T> *scale(Node<T> *x, T c) {
    return unary(x, "scale", [c](T v) { return c * v; },
                 [c](T, T) { return c; });
  }

  Node<T> *add_n(const std::vector<Node<T> *> &xs) {
    require(!xs.empty(), "add_n: empty operand list");
    Node<T> *acc = xs[0];
    for (size_t i = 1; i < xs.size(); ++i) acc = add(acc, xs[i]);
    return acc;
  }

  Node<T> *concat_cols(Node<T> *a, Node<T> *b) {
    require(a->val.rows == b->val.rows, "concat: row mismatch");
    int n = a->val.rows, ca = a->val.cols, cb = b->val.cols;
    Node<T> *y = new_node(n, ca + cb, a->needs_grad || b->needs_grad);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < ca; ++c) y->val.at(r, c) = a->val.at(r, c);
      for (int c = 0; c < cb; ++c) y->val.at(r, ca + c) = b->val.at(r, c);
    }
    if (y->needs_grad) {
      tape_.push_back([=]() {
        for (int r = 0; r < n; ++r) {
          if (a->needs_grad)
            for (int c = 0; c < ca; ++c) a->grad.at(r, c) += y->grad.at(r, c);
          if (b->needs_grad)
            for (int c = 0; c < cb; ++c)
              b->grad.at(r, c) += y->grad.at(r, ca + c);
        }
      });
    }
    return y;
  }

  Node<T> *slice_cols(Node<T> *x, int start, int len) {
    require(start >= 0 && len >= 1 && start + len <= x->val.cols,
            "slice: out of range");
    int n = x->val.rows;
    Node<T> *y = new_node(n, len, x->needs_grad);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < len; ++c) y->val.at(r, c) = x->val.at(r, start + c);
    if (y->needs_grad) {
      tape_.push_back([=]() {
        for (int r = 0; r < n; ++r)
          for (int c = 0; c < len; ++c)
            x->grad.at(r, start + c) += y->grad.at(r, c);
      });
    }
    return y;
  }

  // y_t = x_{t+i} + x_t + x_{t+k} with out-of-range frames clamped to the
  // first/last row.
  Node<T> *context_sum(Node<T> *x, int off_lo, int off_hi) {
    int n = x->val.rows, h = x->val.cols;
    require(n >= 1, "context_sum: empty input");
    auto clamp = [n](int t) { return t < 0 ? 0 : (t >= n ? n - 1 : t); };
    Node<T> *y = new_node(n, h, x->needs_grad);
    for (int t = 0; t < n; ++t) {
      const T *a = &x->val.at(clamp(t + off_lo), 0);
      const T *b = &x->val.at(t, 0);
      const T *c = &x->val.at(clamp(t + off_hi), 0);
      T *out = &y->val.at(t, 0);
      for (int j = 0; j < h; ++j) out[j] = a[j] + b[j] + c[j];
    }
    if (y->needs_grad) {
      tape_.push_back([=]() {
        for (int t = 0; t < n; ++t) {
          const T *g = &y->grad.at(t, 0);
          T *a = &x->grad.at(clamp(t + off_lo), 0);
          T *b = &x->grad.at(t, 0);
          T *c = &x->grad.at(clamp(t + off_hi), 0);
          for (int j = 0; j < h; ++j) {
            a[j] += g[j];
            b[j] += g[j];
            c[j] += g[j];
          }
        }
      });
    }
    return y;
  }

  Node<T> *gather_rows(Node<T> *table, std::vector<int> idx) {
    int u = table->val.rows, d = table->val.cols;
    for (int i : idx) require(i >= 0 && i < u, "gather_rows: index out of range");
    int n = static_cast<int>(idx.size());
    Node<T> *y = new_node(n, d, table->needs_grad);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < d; ++c) y->val.at(r, c) = table->val.at(idx[r], c);
    if (y->needs_grad) {
      tape_.push_back([=, idx = std::move(idx)]() {
        for (int r = 0; r < n; ++r)
          for (int c = 0; c < d; ++c)
            table->grad.at(idx[r], c) += y->grad.at(r, c);
      });
    }
    return y;
  }

  Node<T> *sum_all(Node<T> *x) {
    Node<T> *y = new_node(1, 1, x->needs_grad);
    T acc = T(0);
    for (T v : x->val.v) acc += v;
    y->val.v[0] = acc;
    check_finite(y, "sum");
    if (y->needs_grad) {
      tape_.push_back([=]() {
        T g = y->grad.v[0];
        for (T &gv : x->grad.v) gv += g;
      });
    }
    return y;
  }

  // Mean over rows of -log softmax(logits)[label].
  Node<T> *softmax_cross_entropy(Node<T> *logits, std::vector<int> labels) {
    int n = logits->val.rows, c = logits->val.cols;
    require(static_cast<int>(labels.size()) == n,
            "softmax_cross_entropy: label count mismatch");
    for (int l : labels)
      require(l >= 0 && l < c, "softmax_cross_entropy: label out of range");
    Node<T> *y = new_node(1, 1, logits->needs_grad);
    // Softmax rows are kept for the backward pass.
    auto probs = std::make_shared<Tensor<T>>(n, c);
    T loss = T(0);
    for (int r = 0; r < n; ++r) {
      const T *row = &logits->val.at(r, 0);
      T m = row[0];
      for (int j = 1; j < c; ++j) m = std::max(m, row[j]);
      T z = T(0);
      for (int j = 0; j < c; ++j) z += std::exp(row[j] - m);
      T lse = m + std::log(z);
      loss += lse - row[labels[r]];
      for (int j = 0; j < c; ++j)
        probs->at(r, j) = std::exp(row[j] - m) / z;
    }
    y->val.v[0] = loss / n;
    check_finite(y, "softmax_cross_entropy");
    if (y->needs_grad) {
      tape_.push_back([=, labels = std::move(labels)]() {
        T g = y->grad.v[0] / n;
        for (int r = 0; r < n; ++r) {
          for (int j = 0; j < c; ++j)
            logits->grad.at(r, j) += g * probs->at(r, j);
          logits->grad.at(r, labels[r]) -= g;
        }
      });
    }
    return y;
  }

  // Mean over entries of (pred - target)^2.
  Node<T> *mse(Node<T> *pred, Node<T> *target) {
    require(pred->val.rows == target->val.rows &&
                pred->val.cols == target->val.cols,
            "mse: shape mismatch");
    Node<T> *y = new_node(1, 1, pred->needs_grad || target->needs_grad);
    size_t m = pred->val.numel();
    T acc = T(0);
    for (size_t i = 0; i < m; ++i) {
      T d = pred->val.v[i] - target->val.v[i];
      acc += d * d;
    }
    y->val.v[0] = acc / static_cast<T>(m);
    check_finite(y, "mse");
    if (y->needs_grad) {
      tape_.push_back([=]() {
        T g = y->grad.v[0] * T(2) / static_cast<T>(m);
        for (size_t i = 0; i < m; ++i) {
          T d = pred->val.v[i] - target->val.v[i];
          if (pred->needs_grad) pred->grad.v[i] += g * d;
          if (target->needs_grad) target->grad.v[i] -= g * d;
        }
      });
    }
    return y;
  }

  // Sum over entries of the Gaussian negative log likelihood
  // 0.5 * (ln 2pi + logvar + (target - mean)^2 * exp(-logvar)).
  Node<T> *gaussian_nll(Node<T> *mean, Node<T> *logvar, Node<T> *target) {
    require(mean->val.rows == logvar->val.rows &&
                mean->val.cols == logvar->val.cols &&
                mean->val.rows == target->val.rows &&
                mean->val.cols == target->val.cols,
            "gaussian_nll: shape mismatch");
    Node<T> *y =
        new_node(1, 1, mean->needs_grad || logvar->needs_grad);
    size_t m = mean->val.numel();
    const T ln2pi = T(std::log(2.0 * M_PI));
    T acc = T(0);
    for (size_t i = 0; i < m; ++i) {
      T d = target->val.v[i] - mean->val.v[i];
      acc += T(0.5) * (ln2pi + logvar->val.v[i] +
                       d * d * std::exp(-logvar->val.v[i]));
    }
    y->val.v[0] = acc;
    check_finite(y, "gaussian_nll");
    if (y->needs_grad) {
      tape_.push_back([=]() {
        T g = y->grad.v[0];
        for (size_t i = 0; i < m; ++i) {
          T iv = std::exp(-logvar->val.v[i]);
          T d = target->val.v[i] - mean->val.v[i];
          if (mean->needs_grad) mean->grad.v[i] += g * (-d * iv);
          if (logvar->needs_grad)
            logvar->grad.v[i] += g * T(0.5) * (T(1) - d * d * iv);
        }
      });
    }
    return y;
  }

  // Sum over entries of KL(N(mu_q, e^lq) || N(mu_p, e^lp)) for diagonal
  // Gaussians.
  Node<T> *kl_diag_gaussians(Node<T> *mu_q, Node<T> *logvar_q, Node<T> *mu_p,
                             Node<T> *logvar_p) {
    require(mu_q->val.rows == logvar_q->val.rows &&
                mu_q->val.cols == logvar_q->val.cols &&
                mu_q->val.rows == mu_p->val.rows &&
                mu_q->val.cols == mu_p->val.cols &&
                mu_q->val.rows == logvar_p->val.rows &&
                mu_q->val.cols == logvar_p->val.cols,
            "kl_diag_gaussians: shape mismatch");
    bool needs = mu_q->needs_grad || logvar_q->needs_grad ||
                 mu_p->needs_grad || logvar_p->needs_grad;
    Node<T> *y = new_node(1, 1, needs);
    size_t m = mu_q->val.numel();
    T acc = T(0);
    for (size_t i = 0; i < m; ++i) {
      T lq = logvar_q->val.v[i], lp = logvar_p->val.v[i];
      T dm = mu_q->val.v[i] - mu_p->val.v[i];
      acc += T(0.5) *
             (lp - lq + (std::exp(lq) + dm * dm) * std::exp(-lp) - T(1));
    }
    y->val.v[0] = acc;
    check_finite(y, "kl_diag_gaussians");
    if (y->needs_grad) {
      tape_.push_back([=]() {
        T g = y->grad.v[0];
        for (size_t i = 0; i < m; ++i) {
          T lq = logvar_q->val.v[i], lp = logvar_p->val.v[i];
          T dm = mu_q->val.v[i] - mu_p->val.v[i];
          T ivp = std::exp(-lp);
          if (mu_q->needs_grad) mu_q->grad.v[i] += g * dm * ivp;
          if (mu_p->needs_grad) mu_p->grad.v[i] -= g * dm * ivp;
          if (logvar_q->needs_grad)
            logvar_q->grad.v[i] += g * T(0.5) * (std::exp(lq) * ivp - T(1));
          if (logvar_p->needs_grad)
            logvar_p->grad.v[i] +=
                g * T(0.5) * (T(1) - (std::exp(lq) + dm * dm) * ivp);
        }
      });
    }
    return y;
  }

  // logits[b][u] = -s * ||z_b - table_u||^2; the log-softmax of these rows
  // scores utterance identity from the z2 posterior mean.
  Node<T> *neg_sqdist_logits(Node<T> *z, Node<T> *table, T s) {
    require(z->val.cols == table->val.cols, "neg_sqdist_logits: dim mismatch");
    int n = z->val.rows, u = table->val.rows, d = z->val.cols;
    Node<T> *y = new_node(n, u, z->needs_grad || table->needs_grad);
    for (int b = 0; b < n; ++b) {
      for (int j = 0; j < u; ++j) {
        T acc = T(0);
        for (int c = 0; c < d; ++c) {
          T diff = z->val.at(b, c) - table->val.at(j, c);
          acc += diff * diff;
        }
        y->val.at(b, j) = -s * acc;
      }
    }
    check_finite(y, "neg_sqdist_logits");
    if (y->needs_grad) {
      tape_.push_back([=]() {
        for (int b = 0; b < n; ++b) {
          for (int j = 0; j < u; ++j) {
            T g = y->grad.at(b, j) * T(2) * s;
            for (int c = 0; c < d; ++c) {
              T diff = z->val.at(b, c) - table->val.at(j, c);
              if (z->needs_grad) z->grad.at(b, c) -= g * diff;
              if (table->needs_grad) table->grad.at(j, c) += g * diff;
            }
          }
        }
      });
    }
    return y;
  }

  // sum_b w_b * log N(rows_b; 0, variance * I), used for the utterance-prior
  // term.
  Node<T> *weighted_row_logprior(Node<T> *rows, std::vector<T> weights,
                                 T variance = T(1)) {
    int n = rows->val.rows, d = rows->val.cols;
    require(static_cast<int>(weights.size()) == n,
            "weighted_row_logprior: weight count mismatch");
    require(variance > T(0), "weighted_row_logprior: variance must be positive");
    Node<T> *y = new_node(1, 1, rows->needs_grad);
    const T ln_norm = T(std::log(2.0 * M_PI) +
                        std::log(static_cast<double>(variance)));
    const T inv_var = T(1) / variance;
    T acc = T(0);
    for (int b = 0; b < n; ++b) {
      T sq = T(0);
      for (int c = 0; c < d; ++c) sq += rows->val.at(b, c) * rows->val.at(b, c);
      acc += weights[b] * T(-0.5) * (sq * inv_var + d * ln_norm);
    }
    y->val.v[0] = acc;
    check_finite(y, "weighted_row_logprior");
    if (y->needs_grad) {
      tape_.push_back([=, weights = std::move(weights)]() {
        T g = y->grad.v[0];
        for (int b = 0; b < n; ++b)
          for (int c = 0; c < d; ++c)
            rows->grad.at(b, c) -= g * weights[b] * inv_var * rows->val.at(b, c);
      });
    }
    return y;
  }

  // Runs the tape in reverse from a scalar root, then flushes leaf
  // gradients into their bound parameters.
  void backward(Node<T> *root) {
    require(root->val.numel() == 1, "backward: root must be scalar");
    require(!ran_backward_, "backward: already run on this graph");
    ran_backward_ = true;
    root->grad.v[0] = T(1);
    for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) (*it)();
    for (auto &[param, node] : bound_) {
      for (size_t i = 0; i < node->grad.v.size(); ++i)
        param->grad.v[i] += node->grad.v[i];
    }
  }

  size_t num_nodes() const { return nodes_.size(); }

 private:
  Node<T> *new_node(int rows, int cols, bool needs_grad) {
    nodes_.emplace_back();
    Node<T> &n = nodes_.back();
    n.val = Tensor<T>(rows, cols);
    n.grad = Tensor<T>(rows, cols);
    n.needs_grad = needs_grad;
    return &n;
  }

  static void require(bool ok, const char *msg) {
    if (!ok) throw UsageError(msg);
  }

  void check_finite(const Node<T> *n, const char *op) {
    for (T v : n->val.v) {
      if (!std::isfinite(v))
        throw NumericError(std::string("non-finite value in op ") + op);
    }
  }

  template <class F, class DF>
  Node<T> *unary(Node<T> *x, const char *name, F f, DF df) {
    Node<T> *y = new_node(x->val.rows, x->val.cols, x->needs_grad);
    for (size_t i = 0; i < x->val.v.size(); ++i) y->val.v[i] = f(x->val.v[i]);
    check_finite(y, name);
    if (y->needs_grad) {
      tape_.push_back([=]() {
        for (size_t i = 0; i < x->val.v.size(); ++i)
          x->grad.v[i] += y->grad.v[i] * df(x->val.v[i], y->val.v[i]);
      });
    }
    return y;
  }

  template <class F, class DA, class DB>
  Node<T> *binary(Node<T> *a, Node<T> *b, const char *name, F f, DA da, DB db) {
    require(a->val.rows == b->val.rows && a->val.cols == b->val.cols,
            (std::string(name) + ": shape mismatch").c_str());
    Node<T> *y = new_node(a->val.rows, a->val.cols,
                          a->needs_grad || b->needs_grad);
    for (size_t i = 0; i < a->val.v.size(); ++i)
      y->val.v[i] = f(a->val.v[i], b->val.v[i]);
    check_finite(y, name);
    if (y->needs_grad) {
      tape_.push_back([=]() {
        for (size_t i = 0; i < a->val.v.size(); ++i) {
          if (a->needs_grad)
            a->grad.v[i] +=
                y->grad.v[i] * da(a->val.v[i], b->val.v[i], y->val.v[i]);
          if (b->needs_grad)
            b->grad.v[i] +=
                y->grad.v[i] * db(a->val.v[i], b->val.v[i], y->val.v[i]);
        }
      });
    }
    return y;
  }

  std::deque<Node<T>> nodes_;
  std::vector<std::function<void()>> tape_;
  std::vector<std::pair<Param<T> *, Node<T> *>> bound_;
  bool ran_backward_ = false;
};

// Softmax over rows (inference-side helper; no gradient).
template <class T>
Tensor<T> softmax_rows(const Tensor<T> &logits) {
  Tensor<T> out(logits.rows, logits.cols);
  for (int r = 0; r < logits.rows; ++r) {
    T m = logits.at(r, 0);
    for (int c = 1; c < logits.cols; ++c) m = std::max(m, logits.at(r, c));
    T z = T(0);
    for (int c = 0; c < logits.cols; ++c) {
      out.at(r, c) = std::exp(logits.at(r, c) - m);
      z += out.at(r, c);
    }
    for (int c = 0; c < logits.cols; ++c) out.at(r, c) /= z;
  }
  return out;
}

// Standard LSTM cell built from the core ops.  The weight matrix packs the
// four gates as [input, forget, candidate, output] along the output axis:
// w is (D + H) x 4H, b is 1 x 4H.
template <class T>
struct LstmState {
  Node<T> *h = nullptr;
  Node<T> *c = nullptr;
};

template <class T>
LstmState<T> lstm_cell(Graph<T> &g, Node<T> *x, LstmState<T> prev,
                       Node<T> *w, Node<T> *b) {
  int hidden = w->val.cols / 4;
  Node<T> *joined = g.concat_cols(x, prev.h);
  Node<T> *gates = g.affine(joined, w, b);
  Node<T> *in_gate = g.sigmoid(g.slice_cols(gates, 0, hidden));
  Node<T> *forget_gate = g.sigmoid(g.slice_cols(gates, hidden, hidden));
  Node<T> *candidate = g.tanh(g.slice_cols(gates, 2 * hidden, hidden));
  Node<T> *out_gate = g.sigmoid(g.slice_cols(gates, 3 * hidden, hidden));
  LstmState<T> next;
  next.c = g.add(g.mul(in_gate, candidate), g.mul(forget_gate, prev.c));
  next.h = g.mul(out_gate, g.tanh(next.c));
  return next;
}

// Uniform U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
template <class T>
Tensor<T> xavier_uniform(int rows, int cols, Rng &rng) {
  double a = std::sqrt(6.0 / (rows + cols));
  Tensor<T> t(rows, cols);
  for (T &v : t.v) v = static_cast<T>(rng.uniform(-a, a));
  return t;
}

}  // namespace ad
}  // namespace reverbkit

#endif  // REVERBKIT_AUTODIFF_H_
