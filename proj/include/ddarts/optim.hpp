#pragma once

#include <cmath>
#include <vector>

#include "ddarts/tensor.hpp"

namespace ddarts {

// Momentum gradient descent over a fixed parameter list.
class SgdMomentum {
 public:
  explicit SgdMomentum(double momentum = 0.9) : momentum_(momentum) {}

  void step(std::vector<Tensor>& params, double lr) {
    if (velocity_.empty()) {
      for (const Tensor& p : params) velocity_.emplace_back(p.numel(), 0.0);
    }
    for (size_t i = 0; i < params.size(); ++i) {
      auto& v = velocity_[i];
      auto& val = params[i].values();
      auto& g = params[i].grad();
      for (size_t j = 0; j < val.size(); ++j) {
        v[j] = momentum_ * v[j] + g[j];
        val[j] -= lr * v[j];
      }
    }
  }

 private:
  double momentum_;
  std::vector<std::vector<double>> velocity_;
};

// Adaptive-moment gradient descent; one instance per share group keeps the
// group's optimizer state together.
class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.5, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(std::vector<Tensor>& params) {
    if (m_.empty()) {
      for (const Tensor& p : params) {
        m_.emplace_back(p.numel(), 0.0);
        v_.emplace_back(p.numel(), 0.0);
      }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (size_t i = 0; i < params.size(); ++i) {
      auto& val = params[i].values();
      auto& g = params[i].grad();
      for (size_t j = 0; j < val.size(); ++j) {
        m_[i][j] = beta1_ * m_[i][j] + (1.0 - beta1_) * g[j];
        v_[i][j] = beta2_ * v_[i][j] + (1.0 - beta2_) * g[j] * g[j];
        const double mhat = m_[i][j] / bc1;
        const double vhat = v_[i][j] / bc2;
        val[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
      }
    }
  }

  double lr() const { return lr_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

// Cosine annealing from base to 0 across the run.
inline double cosine_lr(double base, int epoch, int total_epochs) {
  if (total_epochs <= 1) return base;
  return 0.5 * base * (1.0 + std::cos(M_PI * epoch / (total_epochs - 1)));
}

}  // namespace ddarts
