#include "oodgmix/toy.hpp"

#include <random>

namespace oodgmix::toy {

Dataset paths_and_cliques(int per_class) {
  Dataset d;
  d.name = "paths-cliques";
  d.num_classes = 2;
  d.label_map = {0, 1};
  for (int k = 0; k < 2; ++k) {
    for (int s = 0; s < per_class; ++s) {
      Graph g;
      g.id = static_cast<int>(d.graphs.size());
      g.node_count = 3 + s;
      g.label = k;
      for (int i = 0; i < g.node_count; ++i) {
        if (k == 0) {
          if (i + 1 < g.node_count) g.edges.emplace_back(i, i + 1);
        } else {
          for (int j = i + 1; j < g.node_count; ++j) g.edges.emplace_back(i, j);
        }
      }
      d.graphs.push_back(synthesize_degree_features(std::move(g)));
    }
  }
  d.feature_dim = 2;
  return d;
}

Dataset random_graphs(int count, int min_nodes, int max_nodes, int feature_dim,
                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> size(min_nodes, max_nodes);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::bernoulli_distribution extra(0.3);
  Dataset d;
  d.name = "random";
  d.num_classes = 2;
  d.label_map = {0, 1};
  d.feature_dim = feature_dim;
  for (int g_idx = 0; g_idx < count; ++g_idx) {
    Graph g;
    g.id = g_idx;
    g.node_count = size(rng);
    g.label = g_idx % 2;
    // random spanning tree plus extra edges
    for (int v = 1; v < g.node_count; ++v) {
      std::uniform_int_distribution<int> parent(0, v - 1);
      g.edges.emplace_back(parent(rng), v);
    }
    for (int i = 0; i < g.node_count; ++i) {
      for (int j = i + 2; j < g.node_count; ++j) {
        if (extra(rng)) g.edges.emplace_back(i, j);
      }
    }
    canonicalize_edges(g);
    g.features.resize(g.node_count, feature_dim);
    for (Eigen::Index k = 0; k < g.features.size(); ++k) g.features.data()[k] = gauss(rng);
    d.graphs.push_back(std::move(g));
  }
  return d;
}

Split size_shift_split(const Dataset& dataset, int train_max, int val_max) {
  Split s;
  s.spec.criterion = SplitCriterion::node_count;
  s.spec.comparator = SplitComparator::less_than;
  s.spec.threshold = train_max + 0.5;
  for (const auto& g : dataset.graphs) {
    if (g.node_count <= train_max) {
      s.train.push_back(g.id);
    } else if (g.node_count <= val_max) {
      s.val.push_back(g.id);
    } else {
      s.test.push_back(g.id);
    }
  }
  s.spec.train_count = static_cast<int>(s.train.size());
  s.spec.val_count = static_cast<int>(s.val.size());
  s.stats.train = partition_stats(dataset.graphs, s.train);
  s.stats.val = partition_stats(dataset.graphs, s.val);
  s.stats.test = partition_stats(dataset.graphs, s.test);
  return s;
}

}  // namespace oodgmix::toy
