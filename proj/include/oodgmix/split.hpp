#pragma once

#include "oodgmix/graph.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace oodgmix {

enum class SplitCriterion { node_count, edge_count, density };
enum class SplitComparator { less_than, greater_than };

std::string to_string(SplitCriterion c);
std::string to_string(SplitComparator c);
SplitCriterion parse_criterion(const std::string& s);  // "nodes"/"edges"/"density" or enum names
SplitComparator parse_comparator(const std::string& s);  // "lt"/"gt" or enum names

/// One-sided size/density bias: graphs whose statistic passes
/// `value <cmp> threshold` are eligible for train/val, everything else is
/// test. edge_count uses the directed-entry convention (2m).
struct SplitSpec {
  SplitCriterion criterion = SplitCriterion::node_count;
  SplitComparator comparator = SplitComparator::less_than;
  double threshold = 0.0;
  int train_count = 0;
  int val_count = 0;
};

struct PartitionStats {
  int graphs = 0;
  double avg_nodes = 0.0;
  double avg_edges = 0.0;
  double avg_density = 0.0;
};

struct SplitStats {
  PartitionStats train, val, test;
};

struct Split {
  SplitSpec spec;
  std::uint64_t seed = 0;
  std::vector<int> train, val, test;  // graph ids
  SplitStats stats;
};

double criterion_value(const Graph& g, SplitCriterion c);
bool satisfies(const Graph& g, const SplitSpec& spec);

/// Shuffles the qualifying graphs with `seed`, takes the first train_count
/// for train and the next val_count for val. Test receives every remaining
/// graph, sorted by id. Throws ConfigError when too few graphs qualify.
Split biased_split(const std::vector<Graph>& graphs, const SplitSpec& spec, std::uint64_t seed);

PartitionStats partition_stats(const std::vector<Graph>& graphs, const std::vector<int>& ids);

/// Threshold under which exactly `qualifying` graphs pass the comparator:
/// the midpoint between the qualifying-th and next sorted statistic.
/// Throws ConfigError when ties make an exact count impossible.
double threshold_for_count(const std::vector<Graph>& graphs, SplitCriterion criterion,
                           SplitComparator comparator, int qualifying);

/// Table rows "split graphs avg_nodes avg_edges avg_density". Appends a
/// warning line for partitions where avg_edges/avg_nodes deviates from
/// avg_density by more than 5%.
std::string format_split_stats(const SplitStats& stats);

// Split manifest text document.
void write_split_manifest(std::ostream& out, const Split& split);
Split read_split_manifest(std::istream& in);

}  // namespace oodgmix
