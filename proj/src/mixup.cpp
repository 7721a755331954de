#include "oodgmix/mixup.hpp"

#include "oodgmix/errors.hpp"

#include <algorithm>

namespace oodgmix {

double sample_beta(double alpha, double beta, Rng& rng) {
  if (!(alpha > 0.0) || !(beta > 0.0)) throw ContractError("Beta parameters must be positive");
  std::gamma_distribution<double> ga(alpha, 1.0);
  std::gamma_distribution<double> gb(beta, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  return x / (x + y);
}

Eigen::RowVectorXd mix(const Eigen::Ref<const Eigen::RowVectorXd>& zi,
                       const Eigen::Ref<const Eigen::RowVectorXd>& zj, double lambda) {
  return lambda * zi + (1.0 - lambda) * zj;
}

std::vector<VirtualSample> generate_virtual_batch(std::span<const Embedded> embeddings,
                                                  int num_classes, const MixupConfig& config,
                                                  Rng& rng) {
  std::vector<std::vector<int>> members(static_cast<size_t>(num_classes));
  for (size_t i = 0; i < embeddings.size(); ++i) {
    const int y = embeddings[i].label;
    if (y < 0 || y >= num_classes) throw ContractError("mixup: label out of range");
    members[static_cast<size_t>(y)].push_back(static_cast<int>(i));
  }
  std::vector<double> weights;
  for (int k = 0; k < num_classes; ++k) {
    if (members[static_cast<size_t>(k)].empty()) {
      throw TrainingError("class " + std::to_string(k) + " has no training embeddings");
    }
    weights.push_back(static_cast<double>(members[static_cast<size_t>(k)].size()));
  }
  std::discrete_distribution<int> pick_class(weights.begin(), weights.end());

  std::vector<VirtualSample> out;
  out.reserve(static_cast<size_t>(std::max(config.virtual_count, 0)));
  for (int s = 0; s < config.virtual_count; ++s) {
    const int k = pick_class(rng);
    const auto& pool = members[static_cast<size_t>(k)];
    std::uniform_int_distribution<size_t> pick(0, pool.size() - 1);
    VirtualSample v;
    v.source_i = pool[pick(rng)];
    v.source_j = pool[pick(rng)];
    v.lambda = config.fixed_lambda ? *config.fixed_lambda
                                   : sample_beta(config.alpha, config.beta, rng);
    v.label = k;
    v.z_tilde = mix(embeddings[static_cast<size_t>(v.source_i)].z,
                    embeddings[static_cast<size_t>(v.source_j)].z, v.lambda);
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace oodgmix
