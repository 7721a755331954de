#include "oodgmix/rationale.hpp"

#include "oodgmix/errors.hpp"

#include <cmath>

namespace oodgmix::rationale {

using diff::Matrix;
using diff::Var;

void init_params(diff::ParamStore& store, int feature_dim, int mask_dim, std::mt19937_64& rng) {
  if (feature_dim < 1 || mask_dim < 1) {
    throw ContractError("rationale: feature and mask dimensions must be positive");
  }
  const double a = std::sqrt(6.0 / (feature_dim + mask_dim));
  std::uniform_real_distribution<double> u(-a, a);
  Matrix w(feature_dim, mask_dim);
  for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = u(rng);
  store.add(kProjection, std::move(w));
  store.add(kFeatureLogits, Matrix::Zero(1, feature_dim));
}

namespace {

void require_features(const Graph& graph) {
  if (graph.feature_dim() == 0) {
    throw ContractError("graph " + std::to_string(graph.id) +
                        " has no node features; synthesize degree features first");
  }
}

}  // namespace

Var masked_adjacency(diff::Binder& bind, const Graph& graph) {
  require_features(graph);
  auto& tape = bind.tape();
  const Var x = tape.constant(graph.features);
  const Var w = bind(kProjection);
  if (w.rows() != graph.feature_dim()) {
    throw ContractError("rationale: projection expects " + std::to_string(w.rows()) +
                        " features, graph has " + std::to_string(graph.feature_dim()));
  }
  const Var h = diff::matmul(x, w);
  const Var scores = diff::sigmoid(diff::matmul(h, diff::transpose(h)));
  return diff::mul(scores, tape.constant(graph.adjacency()));
}

Var masked_features(diff::Binder& bind, const Graph& graph) {
  require_features(graph);
  const Var logits = bind(kFeatureLogits);
  if (logits.cols() != graph.feature_dim()) {
    throw ContractError("feature mask has " + std::to_string(logits.cols()) +
                        " entries, graph has " + std::to_string(graph.feature_dim()) +
                        " features");
  }
  return diff::mul_row(bind.tape().constant(graph.features), diff::sigmoid(logits));
}

std::vector<EdgeWeight> structure_mask(const Graph& graph, const diff::ParamStore& store) {
  diff::Tape tape;
  diff::Binder bind(tape, store);
  const Matrix& m = masked_adjacency(bind, graph).value();
  std::vector<EdgeWeight> out;
  out.reserve(graph.edges.size());
  for (const auto& [i, j] : graph.edges) out.push_back({i, j, m(i, j)});
  return out;
}

Eigen::MatrixXd apply_feature_mask(const Graph& graph, const diff::ParamStore& store) {
  diff::Tape tape;
  diff::Binder bind(tape, store);
  return masked_features(bind, graph).value();
}

}  // namespace oodgmix::rationale
