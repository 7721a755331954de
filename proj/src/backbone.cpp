#include "oodgmix/backbone.hpp"

#include "oodgmix/errors.hpp"

#include <cmath>

namespace oodgmix::backbone {

using diff::Matrix;
using diff::Var;

std::string weight_name(int layer) { return "gcn." + std::to_string(layer) + ".weight"; }
std::string bias_name(int layer) { return "gcn." + std::to_string(layer) + ".bias"; }

void init_model(diff::ParamStore& store, const ModelShape& shape, std::mt19937_64& rng) {
  if (shape.layers < 1 || shape.hidden_dim < 1 || shape.embed_dim < 1) {
    throw ConfigError("model: layers, hidden and embedding dimensions must be positive");
  }
  rationale::init_params(store, shape.feature_dim, shape.mask_dim, rng);
  int in = shape.feature_dim;
  for (int l = 0; l < shape.layers; ++l) {
    const int out = l + 1 == shape.layers ? shape.embed_dim : shape.hidden_dim;
    const double a = std::sqrt(6.0 / (in + out));
    std::uniform_real_distribution<double> u(-a, a);
    Matrix w(in, out);
    for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = u(rng);
    store.add(weight_name(l), std::move(w));
    store.add(bias_name(l), Matrix::Zero(1, out));
    in = out;
  }
}

Var normalize_adjacency(const Var& weighted_adjacency) {
  auto& tape = *weighted_adjacency.tape();
  const Eigen::Index n = weighted_adjacency.rows();
  const Var with_loops =
      diff::add(weighted_adjacency, tape.constant(Matrix::Identity(n, n)));
  const Var inv_sqrt_deg = diff::rsqrt(diff::row_sum(with_loops));
  return diff::mul_row(diff::mul_col(with_loops, inv_sqrt_deg), diff::transpose(inv_sqrt_deg));
}

Eigen::MatrixXd normalize_adjacency(const std::vector<rationale::EdgeWeight>& edges, int n) {
  Matrix a = Matrix::Zero(n, n);
  for (const auto& e : edges) {
    a(e.i, e.j) = e.weight;
    a(e.j, e.i) = e.weight;
  }
  diff::Tape tape;
  return normalize_adjacency(tape.constant(std::move(a))).value();
}

Var encode(diff::Binder& bind, const Graph& graph, const ModelShape& shape) {
  const Var adj = normalize_adjacency(rationale::masked_adjacency(bind, graph));
  Var h = rationale::masked_features(bind, graph);
  for (int l = 0; l < shape.layers; ++l) {
    h = diff::add_row(diff::matmul(adj, diff::matmul(h, bind(weight_name(l)))),
                      bind(bias_name(l)));
    if (l + 1 < shape.layers) h = diff::relu(h);
  }
  Var z = shape.pooling == Pooling::mean ? diff::mean_rows(h) : diff::col_max(h);
  if (!z.value().allFinite()) {
    throw TrainingError("non-finite embedding for graph " + std::to_string(graph.id));
  }
  return z;
}

Eigen::RowVectorXd embed(const Graph& graph, const diff::ParamStore& store,
                         const ModelShape& shape) {
  diff::Tape tape;
  diff::Binder bind(tape, store);
  return encode(bind, graph, shape).value().row(0);
}

}  // namespace oodgmix::backbone
