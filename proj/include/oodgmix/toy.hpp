#pragma once

// Small built-in datasets for smoke runs and gradient checks.

#include "oodgmix/graph.hpp"
#include "oodgmix/split.hpp"

#include <cstdint>

namespace oodgmix::toy {

/// Class 0: paths on 3..(2+per_class) nodes. Class 1: cliques of the same
/// sizes. Degree features.
Dataset paths_and_cliques(int per_class = 6);

/// Random connected graphs with Gaussian node features and alternating
/// labels.
Dataset random_graphs(int count, int min_nodes, int max_nodes, int feature_dim,
                      std::uint64_t seed);

/// Size-shifted split by node count: train n <= train_max, val
/// train_max < n <= val_max, test the rest. Ids in ascending order.
Split size_shift_split(const Dataset& dataset, int train_max, int val_max);

}  // namespace oodgmix::toy
