#include "oodgmix/split.hpp"

#include "oodgmix/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

namespace oodgmix {

std::string to_string(SplitCriterion c) {
  switch (c) {
    case SplitCriterion::node_count: return "node_count";
    case SplitCriterion::edge_count: return "edge_count";
    case SplitCriterion::density: return "density";
  }
  return "?";
}

std::string to_string(SplitComparator c) {
  return c == SplitComparator::less_than ? "less_than" : "greater_than";
}

SplitCriterion parse_criterion(const std::string& s) {
  if (s == "nodes" || s == "node_count") return SplitCriterion::node_count;
  if (s == "edges" || s == "edge_count") return SplitCriterion::edge_count;
  if (s == "density") return SplitCriterion::density;
  throw ConfigError("unknown bias criterion '" + s + "' (expected nodes|edges|density)");
}

SplitComparator parse_comparator(const std::string& s) {
  if (s == "lt" || s == "less_than") return SplitComparator::less_than;
  if (s == "gt" || s == "greater_than") return SplitComparator::greater_than;
  throw ConfigError("unknown comparator '" + s + "' (expected lt|gt)");
}

double criterion_value(const Graph& g, SplitCriterion c) {
  const auto s = compute_graph_stats(g);
  switch (c) {
    case SplitCriterion::node_count: return s.nodes;
    case SplitCriterion::edge_count: return s.edges_directed;
    case SplitCriterion::density: return s.density;
  }
  return 0.0;
}

bool satisfies(const Graph& g, const SplitSpec& spec) {
  const double v = criterion_value(g, spec.criterion);
  return spec.comparator == SplitComparator::less_than ? v < spec.threshold
                                                       : v > spec.threshold;
}

PartitionStats partition_stats(const std::vector<Graph>& graphs, const std::vector<int>& ids) {
  PartitionStats p;
  p.graphs = static_cast<int>(ids.size());
  if (ids.empty()) return p;
  for (int id : ids) {
    const auto s = compute_graph_stats(graphs.at(static_cast<size_t>(id)));
    p.avg_nodes += s.nodes;
    p.avg_edges += s.edges_directed;
    p.avg_density += s.density;
  }
  const double n = static_cast<double>(ids.size());
  p.avg_nodes /= n;
  p.avg_edges /= n;
  p.avg_density /= n;
  return p;
}

Split biased_split(const std::vector<Graph>& graphs, const SplitSpec& spec, std::uint64_t seed) {
  if (spec.train_count < 1 || spec.val_count < 1) {
    throw ConfigError("train and val counts must be positive");
  }
  std::vector<int> qualifying;
  std::vector<int> rest;
  for (size_t i = 0; i < graphs.size(); ++i) {
    if (graphs[i].id != static_cast<int>(i)) {
      throw ContractError("biased_split: graph ids must equal their positions");
    }
    (satisfies(graphs[i], spec) ? qualifying : rest).push_back(static_cast<int>(i));
  }
  const int needed = spec.train_count + spec.val_count;
  if (static_cast<int>(qualifying.size()) < needed) {
    throw ConfigError("split needs " + std::to_string(needed) + " graphs with " +
                      to_string(spec.criterion) + " " + to_string(spec.comparator) + " " +
                      std::to_string(spec.threshold) + " but only " +
                      std::to_string(qualifying.size()) + " qualify");
  }
  std::mt19937_64 rng(seed);
  std::shuffle(qualifying.begin(), qualifying.end(), rng);

  Split out;
  out.spec = spec;
  out.seed = seed;
  const auto train_end = qualifying.begin() + spec.train_count;
  const auto val_end = train_end + spec.val_count;
  out.train.assign(qualifying.begin(), train_end);
  out.val.assign(train_end, val_end);
  out.test.assign(val_end, qualifying.end());
  out.test.insert(out.test.end(), rest.begin(), rest.end());
  std::sort(out.test.begin(), out.test.end());

  out.stats.train = partition_stats(graphs, out.train);
  out.stats.val = partition_stats(graphs, out.val);
  out.stats.test = partition_stats(graphs, out.test);
  return out;
}

double threshold_for_count(const std::vector<Graph>& graphs, SplitCriterion criterion,
                           SplitComparator comparator, int qualifying) {
  const int n = static_cast<int>(graphs.size());
  if (qualifying < 1 || qualifying >= n) {
    throw ConfigError("target qualifying count must be in [1, " + std::to_string(n - 1) + "]");
  }
  std::vector<double> values;
  values.reserve(graphs.size());
  for (const auto& g : graphs) values.push_back(criterion_value(g, criterion));
  std::sort(values.begin(), values.end());
  if (comparator == SplitComparator::greater_than) std::reverse(values.begin(), values.end());
  const double inside = values[static_cast<size_t>(qualifying - 1)];
  const double outside = values[static_cast<size_t>(qualifying)];
  if (inside == outside) {
    throw ConfigError("no threshold admits exactly " + std::to_string(qualifying) +
                      " graphs: value " + std::to_string(inside) + " is tied across the cut");
  }
  return 0.5 * (inside + outside);
}

std::string format_split_stats(const SplitStats& stats) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-6s %8s %10s %10s %10s\n", "split", "graphs", "avg_nodes",
                "avg_edges", "avg_dens");
  out << line;
  const std::pair<const char*, const PartitionStats*> rows[] = {
      {"train", &stats.train}, {"val", &stats.val}, {"test", &stats.test}};
  for (const auto& [name, p] : rows) {
    std::snprintf(line, sizeof line, "%-6s %8d %10.2f %10.2f %10.2f\n", name, p->graphs,
                  p->avg_nodes, p->avg_edges, p->avg_density);
    out << line;
  }
  out << "# edges counted as directed entries (2m); density = edges/nodes (average degree)\n";
  for (const auto& [name, p] : rows) {
    if (p->graphs == 0 || p->avg_density == 0.0) continue;
    const double ratio = p->avg_edges / p->avg_nodes;
    if (std::abs(ratio - p->avg_density) > 0.05 * p->avg_density) {
      std::snprintf(line, sizeof line,
                    "# warning: %s avg_edges/avg_nodes = %.2f differs from avg_density %.2f by "
                    "more than 5%%\n",
                    name, ratio, p->avg_density);
      out << line;
    }
  }
  return out.str();
}

namespace {

void write_ids(std::ostream& out, const char* key, const std::vector<int>& ids) {
  out << key;
  for (int id : ids) out << ' ' << id;
  out << '\n';
}

std::vector<int> read_ids(std::istringstream& rest) {
  std::vector<int> ids;
  int id = 0;
  while (rest >> id) ids.push_back(id);
  return ids;
}

}  // namespace

void write_split_manifest(std::ostream& out, const Split& split) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", split.spec.threshold);
  out << "criterion " << to_string(split.spec.criterion) << '\n'
      << "comparator " << to_string(split.spec.comparator) << '\n'
      << "threshold " << buf << '\n'
      << "seed " << split.seed << '\n'
      << "train_count " << split.spec.train_count << '\n'
      << "val_count " << split.spec.val_count << '\n';
  write_ids(out, "train", split.train);
  write_ids(out, "val", split.val);
  write_ids(out, "test", split.test);
}

Split read_split_manifest(std::istream& in) {
  Split split;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string key;
    fields >> key;
    if (key == "criterion") {
      std::string v;
      fields >> v;
      split.spec.criterion = parse_criterion(v);
    } else if (key == "comparator") {
      std::string v;
      fields >> v;
      split.spec.comparator = parse_comparator(v);
    } else if (key == "threshold") {
      fields >> split.spec.threshold;
    } else if (key == "seed") {
      fields >> split.seed;
    } else if (key == "train_count") {
      fields >> split.spec.train_count;
    } else if (key == "val_count") {
      fields >> split.spec.val_count;
    } else if (key == "train") {
      split.train = read_ids(fields);
    } else if (key == "val") {
      split.val = read_ids(fields);
    } else if (key == "test") {
      split.test = read_ids(fields);
    } else {
      throw ParseError("split manifest line " + std::to_string(line_no) + ": unknown key '" +
                       key + "'");
    }
  }
  return split;
}

}  // namespace oodgmix
