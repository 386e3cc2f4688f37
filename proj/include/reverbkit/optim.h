// reverbkit/optim.h

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

#ifndef REVERBKIT_OPTIM_H_
#define REVERBKIT_OPTIM_H_

// Minibatch optimizers over a fixed parameter list.  Both optimizers clip
// the global gradient norm before the update and refuse non-finite
// gradients.  All accumulations run in double regardless of the parameter
// scalar type so the clip decision does not depend on it.

#include <cmath>
#include <vector>

#include "reverbkit/autodiff.h"
#include "reverbkit/common.h"

namespace reverbkit {
namespace optim {

template <class T>
double global_grad_norm(const std::vector<ad::Param<T> *> &params) {
  double sq = 0.0;
  for (const auto *p : params) {
    for (T g : p->grad.v) {
      if (!std::isfinite(static_cast<double>(g)))
        throw NumericError("non-finite gradient for parameter " + p->name);
      sq += static_cast<double>(g) * static_cast<double>(g);
    }
  }
  return std::sqrt(sq);
}

// Scales all gradients so the global norm is at most max_norm.  Returns the
// post-clip norm.  max_norm <= 0 disables clipping (the norm is still
// checked for finiteness).
template <class T>
double clip_global_norm(const std::vector<ad::Param<T> *> &params,
                        double max_norm) {
  double norm = global_grad_norm(params);
  if (max_norm <= 0.0 || norm <= max_norm) return norm;
  double s = max_norm / norm;
  for (auto *p : params)
    for (T &g : p->grad.v) g = static_cast<T>(static_cast<double>(g) * s);
  return max_norm;
}

template <class T>
void zero_grads(const std::vector<ad::Param<T> *> &params) {
  for (auto *p : params) p->zero_grad();
}

template <class T>
class Sgd {
 public:
  Sgd(std::vector<ad::Param<T> *> params, double step_size,
      double clip_norm = 5.0)
      : params_(std::move(params)), step_size_(step_size),
        clip_norm_(clip_norm) {}

  void step() {
    clip_global_norm(params_, clip_norm_);
    for (auto *p : params_)
      for (size_t i = 0; i < p->value.v.size(); ++i)
        p->value.v[i] -= static_cast<T>(step_size_) * p->grad.v[i];
    ++t_;
  }

  void set_step_size(double s) { step_size_ = s; }
  double step_size() const { return step_size_; }
  double clip_norm() const { return clip_norm_; }
  int64_t steps_taken() const { return t_; }
  void set_steps_taken(int64_t t) { t_ = t; }
  const std::vector<ad::Param<T> *> &params() const { return params_; }

 private:
  std::vector<ad::Param<T> *> params_;
  double step_size_;
  double clip_norm_;
  int64_t t_ = 0;
};

struct AdamOptions {
  double step_size = 1e-3;
  double beta1 = 0.95;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 5.0;
};

template <class T>
class Adam {
 public:
  Adam(std::vector<ad::Param<T> *> params, AdamOptions opts = {})
      : params_(std::move(params)), opts_(opts) {
    for (auto *p : params_) {
      m_.emplace_back(p->value.rows, p->value.cols);
      v_.emplace_back(p->value.rows, p->value.cols);
    }
  }

  void step() {
    clip_global_norm(params_, opts_.clip_norm);
    ++t_;
    double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
    for (size_t k = 0; k < params_.size(); ++k) {
      ad::Param<T> *p = params_[k];
      for (size_t i = 0; i < p->value.v.size(); ++i) {
        double g = static_cast<double>(p->grad.v[i]);
        double m = opts_.beta1 * m_[k].v[i] + (1.0 - opts_.beta1) * g;
        double v = opts_.beta2 * v_[k].v[i] + (1.0 - opts_.beta2) * g * g;
        m_[k].v[i] = m;
        v_[k].v[i] = v;
        double update =
            opts_.step_size * (m / bc1) / (std::sqrt(v / bc2) + opts_.eps);
        p->value.v[i] -= static_cast<T>(update);
      }
    }
  }

  const AdamOptions &options() const { return opts_; }
  int64_t steps_taken() const { return t_; }
  void set_steps_taken(int64_t t) { t_ = t; }
  // Moment buffers are exposed for checkpointing; order matches params().
  std::vector<ad::Tensor<double>> &first_moments() { return m_; }
  std::vector<ad::Tensor<double>> &second_moments() { return v_; }
  const std::vector<ad::Tensor<double>> &first_moments() const { return m_; }
  const std::vector<ad::Tensor<double>> &second_moments() const { return v_; }
  const std::vector<ad::Param<T> *> &params() const { return params_; }

 private:
  std::vector<ad::Param<T> *> params_;
  AdamOptions opts_;
  std::vector<ad::Tensor<double>> m_;
  std::vector<ad::Tensor<double>> v_;
  int64_t t_ = 0;
};

}  // namespace optim
}  // namespace reverbkit

#endif  // REVERBKIT_OPTIM_H_
