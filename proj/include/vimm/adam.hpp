#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "vimm/error.hpp"
#include "vimm/model.hpp"

namespace vimm {

// Moment-tracked gradient descent with bias correction, conventional
// defaults. Dense state, one slot pair per parameter; step counter is
// shared across all registered tables.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
                         double epsilon = 1e-8)
      : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {
    require(learning_rate >= 0.0, "AdamOptimizer: negative learning rate");
  }

  // register_table returns the slot index to pass to update()
  std::size_t register_table(std::size_t parameter_count) {
    m_.emplace_back(parameter_count, 0.0);
    v_.emplace_back(parameter_count, 0.0);
    return m_.size() - 1;
  }

  void begin_step() { ++t_; }

  void update(std::size_t slot, Matrix& param, const Matrix& grad) {
    require(slot < m_.size(), "AdamOptimizer: unregistered slot");
    require(param.v.size() == m_[slot].size() && grad.v.size() == m_[slot].size(),
            "AdamOptimizer: size mismatch");
    require(t_ >= 1, "AdamOptimizer: update before begin_step");
    std::vector<double>& m = m_[slot];
    std::vector<double>& v = v_[slot];
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < param.v.size(); ++i) {
      const double g = grad.v[i];
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      param.v[i] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
    }
  }

  std::size_t step_count() const { return t_; }

 private:
  double lr_;
  double beta1_;
  double beta2_;
  double eps_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace vimm
