#include "ddarts/losses.hpp"

namespace ddarts {

double zero_one_loss(const std::vector<std::vector<double>>& logit_block) {
  double sum = 0.0;
  size_t n = 0;
  for (const auto& edge : logit_block) {
    for (double a : edge) {
      double d = sigmoid(a) - 0.5;
      sum += d * d;
      ++n;
    }
  }
  if (n == 0) throw Error(Errc::invalid_argument, "zero_one_loss over an empty table");
  return -sum / static_cast<double>(n);
}

double zero_one_loss(const AlphaTable& alpha) {
  double sum = 0.0;
  size_t n = 0;
  for (const auto& block : alpha.logits) {
    for (const auto& edge : block) {
      for (double a : edge) {
        double d = sigmoid(a) - 0.5;
        sum += d * d;
        ++n;
      }
    }
  }
  if (n == 0) throw Error(Errc::invalid_argument, "zero_one_loss over an empty table");
  return -sum / static_cast<double>(n);
}

Tensor zero_one_loss_t(const std::vector<Tensor>& edge_logits) {
  Tensor flat = concat_flat(edge_logits);
  Tensor s = sigmoid_t(flat);
  Tensor centered = add_const(s, -0.5);
  return scale(mean_all(square(centered)), -1.0);
}

double fair_loss(double ce, const AlphaTable& alpha, const LossConfig& cfg) {
  return ce + cfg.w01 * zero_one_loss(alpha);
}

double MarginalContributions::mean() const {
  if (values.empty()) return 0.0;
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double ablation_loss(const MarginalContributions& mc, size_t i) {
  if (i >= mc.values.size()) {
    throw Error(Errc::invalid_argument, "ablation_loss cell index out of range");
  }
  const double m = mc.mean();
  if (m == 0.0) return 0.0;
  return (mc.values[i] - m) / m;
}

double total_loss(double ce, const std::vector<std::vector<double>>& cell_alpha,
                  const MarginalContributions& mc, size_t i, const LossConfig& cfg) {
  return ce + cfg.w01 * zero_one_loss(cell_alpha) + cfg.w_abl * ablation_loss(mc, i);
}

}  // namespace ddarts
