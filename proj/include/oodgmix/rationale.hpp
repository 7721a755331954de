#pragma once

// Soft rationale extraction: a learned edge mask over existing edges and a
// learned per-feature mask.
//
//   H = X * W_m                  (one linear layer, d -> p)
//   M_ij = sigmoid(<H_i, H_j>)   for every existing edge {i, j}
//   X_r = sigmoid(eta_raw) .* X  (broadcast over nodes)

#include "oodgmix/diff.hpp"
#include "oodgmix/graph.hpp"

#include <random>
#include <vector>

namespace oodgmix::rationale {

inline constexpr const char* kProjection = "rationale.projection";        // d x p
inline constexpr const char* kFeatureLogits = "rationale.feature_logits";  // 1 x d

void init_params(diff::ParamStore& store, int feature_dim, int mask_dim, std::mt19937_64& rng);

/// n x n matrix M .* A: learned weights on existing edges, zero elsewhere.
/// Throws ContractError when the graph has no features.
diff::Var masked_adjacency(diff::Binder& bind, const Graph& graph);

/// X_r = sigmoid(eta_raw) .* X. Throws ContractError on a width mismatch.
diff::Var masked_features(diff::Binder& bind, const Graph& graph);

struct EdgeWeight {
  int i = 0;
  int j = 0;
  double weight = 0.0;
};

// Gradient-free views of the two masks.
std::vector<EdgeWeight> structure_mask(const Graph& graph, const diff::ParamStore& store);
Eigen::MatrixXd apply_feature_mask(const Graph& graph, const diff::ParamStore& store);

}  // namespace oodgmix::rationale
