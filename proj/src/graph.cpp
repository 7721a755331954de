#include "oodgmix/graph.hpp"

#include "oodgmix/errors.hpp"

#include <algorithm>
#include <cmath>

namespace oodgmix {

Eigen::MatrixXd Graph::adjacency() const {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(node_count, node_count);
  for (const auto& [i, j] : edges) {
    a(i, j) = 1.0;
    a(j, i) = 1.0;
  }
  return a;
}

std::vector<int> Graph::degrees() const {
  std::vector<int> deg(static_cast<size_t>(node_count), 0);
  for (const auto& [i, j] : edges) {
    ++deg[static_cast<size_t>(i)];
    ++deg[static_cast<size_t>(j)];
  }
  return deg;
}

bool operator==(const Graph& a, const Graph& b) {
  return a.id == b.id && a.node_count == b.node_count && a.edges == b.edges &&
         a.label == b.label && a.features.rows() == b.features.rows() &&
         a.features.cols() == b.features.cols() && a.features == b.features;
}

GraphStats compute_graph_stats(const Graph& graph) {
  if (graph.node_count < 1) {
    throw ContractError("compute_graph_stats: graph " + std::to_string(graph.id) +
                        " has no nodes");
  }
  GraphStats s;
  s.nodes = graph.node_count;
  s.edges_directed = 2 * static_cast<int>(graph.edges.size());
  s.density = static_cast<double>(s.edges_directed) / s.nodes;
  return s;
}

Graph synthesize_degree_features(Graph graph) {
  const auto deg = graph.degrees();
  const int max_deg = deg.empty() ? 0 : *std::max_element(deg.begin(), deg.end());
  graph.features.resize(graph.node_count, 2);
  const double denom = max_deg > 0 ? std::log1p(static_cast<double>(max_deg)) : 1.0;
  for (int v = 0; v < graph.node_count; ++v) {
    graph.features(v, 0) = 1.0;
    graph.features(v, 1) =
        max_deg > 0 ? std::log1p(static_cast<double>(deg[static_cast<size_t>(v)])) / denom
                    : 0.0;
  }
  return graph;
}

void ensure_features(Dataset& dataset) {
  if (dataset.feature_dim > 0) return;
  for (auto& g : dataset.graphs) g = synthesize_degree_features(std::move(g));
  dataset.feature_dim = 2;
}

void canonicalize_edges(Graph& graph) {
  for (auto& [i, j] : graph.edges) {
    if (i < 0 || j < 0 || i >= graph.node_count || j >= graph.node_count) {
      throw IntegrityError("graph " + std::to_string(graph.id) + ": edge (" +
                           std::to_string(i) + "," + std::to_string(j) +
                           ") outside node range");
    }
    if (i > j) std::swap(i, j);
  }
  std::erase_if(graph.edges, [](const auto& e) { return e.first == e.second; });
  std::sort(graph.edges.begin(), graph.edges.end());
  graph.edges.erase(std::unique(graph.edges.begin(), graph.edges.end()), graph.edges.end());
}

}  // namespace oodgmix
