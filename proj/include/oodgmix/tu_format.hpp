#pragma once

#include "oodgmix/graph.hpp"

#include <filesystem>

namespace oodgmix {

/// Reads a dataset in the TU benchmark layout. The file prefix is the
/// directory's basename (`<dir>/<DS>_A.txt` etc.).
///
/// Mandatory: DS_A.txt (1-based node pairs), DS_graph_indicator.txt,
/// DS_graph_labels.txt. Optional: DS_node_labels.txt (one-hot encoded) and
/// DS_node_attributes.txt (used verbatim); when both exist the one-hot block
/// comes first. Separators may be commas or whitespace.
///
/// Graph labels are remapped to 0..K-1 in sorted order of the original
/// values; Dataset::label_map keeps the inverse. Graphs come back without
/// features (feature_dim 0) when neither optional file is present.
Dataset parse_tu_dataset(const std::filesystem::path& directory);

/// Writes `dataset` back in TU layout under `directory/<name>_*.txt`.
/// Features are written as node attributes with round-trip precision, so
/// parse_tu_dataset reproduces identical graphs.
void write_tu_dataset(const Dataset& dataset, const std::filesystem::path& directory);

}  // namespace oodgmix
