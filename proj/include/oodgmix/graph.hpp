#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace oodgmix {

/// Undirected attributed graph with a class label.
///
/// `edges` holds canonical unordered pairs (first < second), sorted and
/// unique. `features` has one row per node; its column count is shared by
/// every graph of a dataset.
struct Graph {
  int id = 0;
  int node_count = 0;
  std::vector<std::pair<int, int>> edges;
  Eigen::MatrixXd features;
  int label = 0;

  int feature_dim() const { return static_cast<int>(features.cols()); }

  // 0/1 adjacency, symmetric, zero diagonal.
  Eigen::MatrixXd adjacency() const;
  std::vector<int> degrees() const;

  friend bool operator==(const Graph& a, const Graph& b);
};

struct Dataset {
  std::string name;
  std::vector<Graph> graphs;
  int feature_dim = 0;
  int num_classes = 0;
  // internal class index -> original label value in the source files
  std::vector<std::int64_t> label_map;
};

struct GraphStats {
  int nodes = 0;
  int edges_directed = 0;  // 2m: each undirected edge counted in both directions
  double density = 0.0;    // edges_directed / nodes, i.e. average degree
};

GraphStats compute_graph_stats(const Graph& graph);

/// Replaces empty node features by [1, log(1+deg) / log(1+max_deg)].
/// The second entry is 0 when the graph has no edges.
Graph synthesize_degree_features(Graph graph);

/// Applies synthesize_degree_features to every graph when the dataset has
/// no node features; no-op otherwise.
void ensure_features(Dataset& dataset);

/// Sorts, deduplicates and drops self loops; throws IntegrityError for
/// out-of-range endpoints.
void canonicalize_edges(Graph& graph);

}  // namespace oodgmix
