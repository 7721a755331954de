#pragma once

// Graph encoder: rationale masks, weighted-adjacency GCN layers, pooling.

#include "oodgmix/diff.hpp"
#include "oodgmix/graph.hpp"
#include "oodgmix/rationale.hpp"

#include <random>
#include <string>
#include <vector>

namespace oodgmix::backbone {

enum class Pooling { mean, max };

struct ModelShape {
  int feature_dim = 0;
  int mask_dim = 64;  // p of the rationale projection
  int hidden_dim = 64;
  int layers = 2;  // 1..3
  int embed_dim = 64;
  Pooling pooling = Pooling::mean;
};

std::string weight_name(int layer);
std::string bias_name(int layer);

/// Registers rationale and GCN parameters: Glorot-uniform weights, zero
/// biases, zero feature-mask logits.
void init_model(diff::ParamStore& store, const ModelShape& shape, std::mt19937_64& rng);

/// D^{-1/2} (A + I) D^{-1/2} for a symmetric weighted adjacency without self
/// loops; D is the weighted degree of A + I, so every degree is >= 1.
diff::Var normalize_adjacency(const diff::Var& weighted_adjacency);

/// Dense normalized adjacency from an edge-weight list.
Eigen::MatrixXd normalize_adjacency(const std::vector<rationale::EdgeWeight>& edges, int n);

/// Embedding z (1 x embed_dim). ReLU between layers, last layer linear,
/// then pooling over nodes. Throws TrainingError if z is not finite.
diff::Var encode(diff::Binder& bind, const Graph& graph, const ModelShape& shape);

/// Gradient-free embedding.
Eigen::RowVectorXd embed(const Graph& graph, const diff::ParamStore& store,
                         const ModelShape& shape);

}  // namespace oodgmix::backbone
