#include "oodgmix/tu_format.hpp"

#include "oodgmix/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <string_view>

namespace oodgmix {
namespace {

namespace fs = std::filesystem;

std::vector<std::string_view> split_tokens(std::string_view line) {
  std::vector<std::string_view> out;
  size_t pos = 0;
  auto is_sep = [](char c) { return c == ',' || c == ' ' || c == '\t' || c == '\r'; };
  while (pos < line.size()) {
    while (pos < line.size() && is_sep(line[pos])) ++pos;
    size_t end = pos;
    while (end < line.size() && !is_sep(line[end])) ++end;
    if (end > pos) out.push_back(line.substr(pos, end - pos));
    pos = end;
  }
  return out;
}

struct Rows {
  std::string file;
  std::vector<std::vector<std::string_view>> tokens;
  std::vector<int> line_numbers;
  std::unique_ptr<std::string> storage;  // views above point into this buffer
};

// Keeps the buffer alive alongside the views into it; blank lines skipped.
Rows read_rows(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("missing file: " + path.string());
  Rows rows;
  rows.file = path.filename().string();
  rows.storage = std::make_unique<std::string>(std::istreambuf_iterator<char>(in),
                                               std::istreambuf_iterator<char>());
  std::string_view all(*rows.storage);
  int line_no = 0;
  size_t start = 0;
  while (start <= all.size()) {
    size_t end = all.find('\n', start);
    if (end == std::string_view::npos) end = all.size();
    ++line_no;
    auto toks = split_tokens(all.substr(start, end - start));
    if (!toks.empty()) {
      rows.tokens.push_back(std::move(toks));
      rows.line_numbers.push_back(line_no);
    }
    if (end == all.size()) break;
    start = end + 1;
  }
  return rows;
}

std::int64_t to_int(const Rows& rows, size_t r, size_t c) {
  const auto tok = rows.tokens[r][c];
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw ParseError(rows.file + ":" + std::to_string(rows.line_numbers[r]) +
                     ": expected integer, got '" + std::string(tok) + "'");
  }
  return v;
}

double to_real(const Rows& rows, size_t r, size_t c) {
  const auto tok = rows.tokens[r][c];
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw ParseError(rows.file + ":" + std::to_string(rows.line_numbers[r]) +
                     ": expected real number, got '" + std::string(tok) + "'");
  }
  return v;
}

std::vector<std::int64_t> single_int_column(const Rows& rows) {
  std::vector<std::int64_t> out;
  out.reserve(rows.tokens.size());
  for (size_t r = 0; r < rows.tokens.size(); ++r) {
    if (rows.tokens[r].size() != 1) {
      throw ParseError(rows.file + ":" + std::to_string(rows.line_numbers[r]) +
                       ": expected exactly one value");
    }
    out.push_back(to_int(rows, r, 0));
  }
  return out;
}

std::string prefix_of(const fs::path& directory) {
  auto p = directory;
  if (!p.has_filename()) p = p.parent_path();
  return p.filename().string();
}

}  // namespace

Dataset parse_tu_dataset(const fs::path& directory) {
  const std::string ds = prefix_of(directory);
  auto file = [&](const char* suffix) { return directory / (ds + suffix); };

  const Rows edges_rows = read_rows(file("_A.txt"));
  const Rows indicator_rows = read_rows(file("_graph_indicator.txt"));
  const Rows label_rows = read_rows(file("_graph_labels.txt"));

  const auto indicator = single_int_column(indicator_rows);
  const auto raw_labels = single_int_column(label_rows);

  // Distinct indicator values, in sorted order, define the graphs.
  std::map<std::int64_t, int> graph_index;
  for (auto g : indicator) graph_index.emplace(g, 0);
  {
    int k = 0;
    for (auto& [value, idx] : graph_index) idx = k++;
  }
  const int num_graphs = static_cast<int>(graph_index.size());
  if (static_cast<int>(raw_labels.size()) != num_graphs) {
    throw IntegrityError(label_rows.file + ": " + std::to_string(raw_labels.size()) +
                         " labels for " + std::to_string(num_graphs) + " graphs");
  }

  Dataset dataset;
  dataset.name = ds;
  dataset.graphs.resize(static_cast<size_t>(num_graphs));

  // node (0-based global) -> (graph, local index)
  std::vector<std::pair<int, int>> node_home(indicator.size());
  for (size_t v = 0; v < indicator.size(); ++v) {
    const int g = graph_index.at(indicator[v]);
    auto& graph = dataset.graphs[static_cast<size_t>(g)];
    node_home[v] = {g, graph.node_count++};
  }
  for (int g = 0; g < num_graphs; ++g) dataset.graphs[static_cast<size_t>(g)].id = g;

  const std::int64_t total_nodes = static_cast<std::int64_t>(indicator.size());
  for (size_t r = 0; r < edges_rows.tokens.size(); ++r) {
    if (edges_rows.tokens[r].size() != 2) {
      throw ParseError(edges_rows.file + ":" + std::to_string(edges_rows.line_numbers[r]) +
                       ": expected two node ids");
    }
    const auto a = to_int(edges_rows, r, 0);
    const auto b = to_int(edges_rows, r, 1);
    const std::string where =
        edges_rows.file + ":" + std::to_string(edges_rows.line_numbers[r]);
    if (a < 1 || b < 1 || a > total_nodes || b > total_nodes) {
      throw IntegrityError(where + ": node id outside 1.." + std::to_string(total_nodes));
    }
    const auto [ga, la] = node_home[static_cast<size_t>(a - 1)];
    const auto [gb, lb] = node_home[static_cast<size_t>(b - 1)];
    if (ga != gb) {
      throw IntegrityError(where + ": edge (" + std::to_string(a) + "," + std::to_string(b) +
                           ") joins nodes of different graphs");
    }
    dataset.graphs[static_cast<size_t>(ga)].edges.emplace_back(la, lb);
  }
  for (auto& g : dataset.graphs) canonicalize_edges(g);

  // Graph labels -> 0..K-1 preserving sorted original order.
  std::set<std::int64_t> distinct(raw_labels.begin(), raw_labels.end());
  dataset.label_map.assign(distinct.begin(), distinct.end());
  dataset.num_classes = static_cast<int>(dataset.label_map.size());
  for (int g = 0; g < num_graphs; ++g) {
    const auto it = std::lower_bound(dataset.label_map.begin(), dataset.label_map.end(),
                                     raw_labels[static_cast<size_t>(g)]);
    dataset.graphs[static_cast<size_t>(g)].label =
        static_cast<int>(it - dataset.label_map.begin());
  }

  // Optional node features.
  Eigen::MatrixXd one_hot;
  Eigen::MatrixXd attributes;
  const auto n_total = static_cast<Eigen::Index>(indicator.size());
  if (fs::exists(file("_node_labels.txt"))) {
    const Rows rows = read_rows(file("_node_labels.txt"));
    std::vector<std::int64_t> node_labels;
    node_labels.reserve(rows.tokens.size());
    // Multi-column node labels are rare; only the first column is encoded.
    for (size_t r = 0; r < rows.tokens.size(); ++r) node_labels.push_back(to_int(rows, r, 0));
    if (static_cast<Eigen::Index>(node_labels.size()) != n_total) {
      throw IntegrityError(rows.file + ": " + std::to_string(node_labels.size()) +
                           " rows for " + std::to_string(n_total) + " nodes");
    }
    std::set<std::int64_t> values(node_labels.begin(), node_labels.end());
    std::vector<std::int64_t> sorted(values.begin(), values.end());
    one_hot = Eigen::MatrixXd::Zero(n_total, static_cast<Eigen::Index>(sorted.size()));
    for (Eigen::Index v = 0; v < n_total; ++v) {
      const auto it = std::lower_bound(sorted.begin(), sorted.end(),
                                       node_labels[static_cast<size_t>(v)]);
      one_hot(v, it - sorted.begin()) = 1.0;
    }
  }
  if (fs::exists(file("_node_attributes.txt"))) {
    const Rows rows = read_rows(file("_node_attributes.txt"));
    if (static_cast<Eigen::Index>(rows.tokens.size()) != n_total) {
      throw IntegrityError(rows.file + ": " + std::to_string(rows.tokens.size()) +
                           " rows for " + std::to_string(n_total) + " nodes");
    }
    const size_t width = rows.tokens.front().size();
    attributes.resize(n_total, static_cast<Eigen::Index>(width));
    for (size_t r = 0; r < rows.tokens.size(); ++r) {
      if (rows.tokens[r].size() != width) {
        throw ParseError(rows.file + ":" + std::to_string(rows.line_numbers[r]) + ": expected " +
                         std::to_string(width) + " values");
      }
      for (size_t c = 0; c < width; ++c) {
        attributes(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            to_real(rows, r, c);
      }
    }
  }

  const Eigen::Index d = one_hot.cols() + attributes.cols();
  dataset.feature_dim = static_cast<int>(d);
  for (auto& g : dataset.graphs) g.features.resize(g.node_count, d);
  if (d > 0) {
    for (Eigen::Index v = 0; v < n_total; ++v) {
      const auto [g, local] = node_home[static_cast<size_t>(v)];
      auto row = dataset.graphs[static_cast<size_t>(g)].features.row(local);
      if (one_hot.cols() > 0) row.head(one_hot.cols()) = one_hot.row(v);
      if (attributes.cols() > 0) row.tail(attributes.cols()) = attributes.row(v);
    }
  }
  return dataset;
}

void write_tu_dataset(const Dataset& dataset, const fs::path& directory) {
  fs::create_directories(directory);
  const std::string& ds = dataset.name;
  auto open = [&](const char* suffix) {
    const auto path = directory / (ds + suffix);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write file: " + path.string());
    return out;
  };

  auto a_out = open("_A.txt");
  auto ind_out = open("_graph_indicator.txt");
  auto lab_out = open("_graph_labels.txt");
  std::int64_t offset = 1;
  for (const auto& g : dataset.graphs) {
    for (const auto& [i, j] : g.edges) {
      a_out << offset + i << ", " << offset + j << '\n';
      a_out << offset + j << ", " << offset + i << '\n';
    }
    for (int v = 0; v < g.node_count; ++v) ind_out << g.id + 1 << '\n';
    const auto original = dataset.label_map.empty()
                               ? static_cast<std::int64_t>(g.label)
                               : dataset.label_map.at(static_cast<size_t>(g.label));
    lab_out << original << '\n';
    offset += g.node_count;
  }

  if (dataset.feature_dim > 0) {
    auto attr_out = open("_node_attributes.txt");
    char buf[32];
    for (const auto& g : dataset.graphs) {
      for (Eigen::Index v = 0; v < g.features.rows(); ++v) {
        for (Eigen::Index c = 0; c < g.features.cols(); ++c) {
          std::snprintf(buf, sizeof buf, "%.17g", g.features(v, c));
          if (c > 0) attr_out << ", ";
          attr_out << buf;
        }
        attr_out << '\n';
      }
    }
  }
}

}  // namespace oodgmix
