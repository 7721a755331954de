#pragma once

// Same-label manifold mixup in embedding space.

#include "oodgmix/metric_head.hpp"

#include <Eigen/Dense>

#include <optional>
#include <random>
#include <span>
#include <vector>

namespace oodgmix {

using Rng = std::mt19937_64;

struct MixupConfig {
  double alpha = 2.0;
  double beta = 2.0;
  int virtual_count = 0;  // per epoch; the trainer uses the training-set size
  std::optional<double> fixed_lambda;  // bypasses Beta sampling when set
};

struct VirtualSample {
  Eigen::RowVectorXd z_tilde;
  int label = 0;
  double lambda = 1.0;
  int source_i = -1;  // indices into the embedding sequence the batch was built from
  int source_j = -1;
  double omega = 0.0;
  double omega_bar = 0.0;
};

/// One Beta(alpha, beta) draw as X / (X + Y) with X ~ Gamma(alpha),
/// Y ~ Gamma(beta).
double sample_beta(double alpha, double beta, Rng& rng);

/// z_tilde = lambda * z_i + (1 - lambda) * z_j.
Eigen::RowVectorXd mix(const Eigen::Ref<const Eigen::RowVectorXd>& zi,
                       const Eigen::Ref<const Eigen::RowVectorXd>& zj, double lambda);

/// Draws config.virtual_count samples: class k with probability N_k / N,
/// then i and j uniformly (with replacement) within class k, then a fresh
/// lambda. omega and omega_bar are left at 0.
std::vector<VirtualSample> generate_virtual_batch(std::span<const Embedded> embeddings,
                                                  int num_classes, const MixupConfig& config,
                                                  Rng& rng);

}  // namespace oodgmix
