#pragma once

#include <vector>

#include "ddarts/alpha.hpp"
#include "ddarts/tensor.hpp"

namespace ddarts {

struct LossConfig {
  double w01 = 7.0;    // weight of the zero-one regularizer
  double w_abl = 0.5;  // weight of the per-cell ablation term
};

// -(1/|alpha|) * sum (sigmoid(a) - 0.5)^2 over one logit block (a cell's
// table) or over a whole alpha table.
double zero_one_loss(const std::vector<std::vector<double>>& logit_block);
double zero_one_loss(const AlphaTable& alpha);

// Differentiable variant over a list of per-edge logit tensors.
Tensor zero_one_loss_t(const std::vector<Tensor>& edge_logits);

// ce + w01 * L01(alpha).
double fair_loss(double ce, const AlphaTable& alpha, const LossConfig& cfg);

// Per-cell marginal contributions: full-network loss minus the loss with the
// cell bypassed.
struct MarginalContributions {
  std::vector<double> values;

  double mean() const;
};

// (mc_i - mean) / mean, or 0 when the mean vanishes.
double ablation_loss(const MarginalContributions& mc, size_t i);

// ce + w01 * L01(cell alpha) + w_abl * ablation_loss(mc, i).
double total_loss(double ce, const std::vector<std::vector<double>>& cell_alpha,
                  const MarginalContributions& mc, size_t i, const LossConfig& cfg);

}  // namespace ddarts
