#include "oodgmix/cli.hpp"

#include "oodgmix/errors.hpp"
#include "oodgmix/evt.hpp"
#include "oodgmix/report.hpp"
#include "oodgmix/split.hpp"
#include "oodgmix/toy.hpp"
#include "oodgmix/trainer.hpp"
#include "oodgmix/tu_format.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace oodgmix {
namespace {

namespace fs = std::filesystem;

struct DataFlags {
  std::string dataset_dir;
  std::string bias = "nodes";
  std::string cmp = "lt";
  std::optional<double> threshold;
  std::optional<int> target_qualifying;
  int train_count = 0;
  int val_count = 0;
  std::uint64_t seed = 0;
};

void add_data_flags(CLI::App* app, DataFlags& f, bool required) {
  app->add_option("--dataset-dir", f.dataset_dir,
                  required ? "TU dataset directory (required)" : "TU dataset directory");
  app->add_option("--bias", f.bias, "bias criterion")
      ->check(CLI::IsMember({"nodes", "edges", "density"}));
  app->add_option("--cmp", f.cmp, "comparator")->check(CLI::IsMember({"lt", "gt"}));
  app->add_option("--threshold", f.threshold, "bias threshold");
  app->add_option("--target-qualifying", f.target_qualifying,
                  "derive the threshold so that exactly this many graphs qualify");
  app->add_option("--train-count", f.train_count, "training graphs");
  app->add_option("--val-count", f.val_count, "validation graphs");
  app->add_option("--seed", f.seed, "random seed");
}

fs::path resolve_dataset_dir(const std::string& given) {
  fs::path p(given);
  if (fs::is_directory(p)) return p;
  if (const char* root = std::getenv(kDataRootEnv); root != nullptr && p.is_relative()) {
    const fs::path alt = fs::path(root) / p;
    if (fs::is_directory(alt)) return alt;
  }
  throw ConfigError("--dataset-dir: directory not found: " + given);
}

Dataset load(const DataFlags& f) {
  if (f.dataset_dir.empty()) throw ConfigError("--dataset-dir is required");
  Dataset d = parse_tu_dataset(resolve_dataset_dir(f.dataset_dir));
  ensure_features(d);
  return d;
}

Split make_split(const Dataset& d, const DataFlags& f) {
  SplitSpec spec;
  spec.criterion = parse_criterion(f.bias);
  spec.comparator = parse_comparator(f.cmp);
  if (f.threshold && f.target_qualifying) {
    throw ConfigError("--threshold and --target-qualifying are mutually exclusive");
  }
  if (f.threshold) {
    spec.threshold = *f.threshold;
  } else if (f.target_qualifying) {
    spec.threshold =
        threshold_for_count(d.graphs, spec.criterion, spec.comparator, *f.target_qualifying);
  } else {
    throw ConfigError("--threshold (or --target-qualifying) is required");
  }
  if (f.train_count < 1) throw ConfigError("--train-count must be positive");
  if (f.val_count < 1) throw ConfigError("--val-count must be positive");
  spec.train_count = f.train_count;
  spec.val_count = f.val_count;
  return biased_split(d.graphs, spec, f.seed);
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string label_map_line(const Dataset& d) {
  std::string s = "# labels (internal -> original):";
  for (size_t k = 0; k < d.label_map.size(); ++k) {
    s += " " + std::to_string(k) + "->" + std::to_string(d.label_map[k]);
  }
  return s + "\n";
}

struct TrainFlags {
  std::string method = "oodgmixup";
  std::string pool = "mean";
  std::string out_dir;
  TrainConfig config;
};

void add_model_flags(CLI::App* app, TrainConfig& c, std::string& pool) {
  app->add_option("--epochs", c.epochs, "training epochs");
  app->add_option("--lr", c.lr, "Adam learning rate");
  app->add_option("--batch", c.batch_size, "mini-batch size");
  app->add_option("--hidden", c.hidden_dim, "GCN hidden dimension");
  app->add_option("--layers", c.layers, "GCN layers (1-3)");
  app->add_option("--embed-dim", c.embed_dim, "graph embedding dimension");
  app->add_option("--mask-dim", c.mask_dim, "structure-mask projection dimension (0: hidden)");
  app->add_option("--pool", pool, "readout")->check(CLI::IsMember({"mean", "max"}));
  app->add_option("--alpha", c.alpha, "Beta(alpha, beta) mixup parameter");
  app->add_option("--beta", c.beta, "Beta(alpha, beta) mixup parameter");
  app->add_option("--tail", c.tail_size, "EVT tail size");
  app->add_option("--patience", c.patience, "early-stopping patience in epochs");
}

int cmd_split_stats(const DataFlags& f, const std::string& out_path, std::ostream& out) {
  const Dataset d = load(f);
  const Split split = make_split(d, f);
  out << "dataset " << d.name << ": " << d.graphs.size() << " graphs, " << d.num_classes
      << " classes, feature dim " << d.feature_dim << "\n";
  out << "bias " << to_string(split.spec.criterion) << " " << to_string(split.spec.comparator)
      << " " << split.spec.threshold << ", seed " << split.seed << "\n";
  out << format_split_stats(split.stats);
  out << label_map_line(d);
  if (!out_path.empty()) {
    std::ofstream m(out_path);
    if (!m) throw std::runtime_error("--out: cannot write " + out_path);
    write_split_manifest(m, split);
  }
  return kExitOk;
}

int cmd_train(const DataFlags& f, TrainFlags& t, std::ostream& out, std::ostream& err) {
  t.config.method = parse_method(t.method);
  t.config.pooling = t.pool == "max" ? backbone::Pooling::max : backbone::Pooling::mean;
  t.config.seed = f.seed;
  t.config.validate();
  const Dataset d = load(f);
  const Split split = make_split(d, f);

  const fs::path run_dir =
      t.out_dir.empty() ? fs::path("run-" + to_string(t.config.method) + "-" + std::to_string(f.seed))
                        : fs::path(t.out_dir);
  fs::create_directories(run_dir);
  nlohmann::json echo = to_json(t.config);
  echo["dataset_dir"] = f.dataset_dir;
  echo["bias"] = f.bias;
  echo["cmp"] = f.cmp;
  if (f.threshold) echo["threshold"] = *f.threshold;
  if (f.target_qualifying) echo["target_qualifying"] = *f.target_qualifying;
  echo["train_count"] = f.train_count;
  echo["val_count"] = f.val_count;
  write_file(run_dir / "config.json", echo.dump(2) + "\n");
  {
    std::ofstream m(run_dir / "split.txt");
    write_split_manifest(m, split);
  }

  RunReport report;
  try {
    report = train(d, split, t.config);
  } catch (const TrainingDiverged& e) {
    RunReport partial = e.report();
    partial.split_manifest = "split.txt";
    write_file(run_dir / "report.json", serialize_report(partial));
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  report.split_manifest = "split.txt";
  write_file(run_dir / "report.json", serialize_report(report));

  out << "method " << to_string(t.config.method) << ", " << report.epochs.size()
      << " epochs, best epoch " << report.best_epoch << "\n";
  out << "train accuracy " << report.final_train_accuracy << ", val accuracy "
      << report.best_val_accuracy << ", test accuracy " << report.test_accuracy << "\n";
  out << "report written to " << (run_dir / "report.json").string() << "\n";
  return kExitOk;
}

int cmd_evt_fit(const std::string& input, int tail, const std::string& out_path, std::ostream& out) {
  std::ifstream in(input);
  if (!in) throw ConfigError("--input: cannot read " + input);
  std::vector<double> values;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      size_t used = 0;
      values.push_back(std::stod(line, &used));
      if (line.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw ParseError(input + ":" + std::to_string(line_no) + ": expected a real number");
    }
  }
  const int tau = tail > 0 ? tail : static_cast<int>(std::max<size_t>(values.size(), 1));
  const auto model = evt::weibull_fit_high(values, tau);
  const std::string doc = to_json(model).dump(2) + "\n";
  if (out_path.empty()) {
    out << doc;
  } else {
    write_file(out_path, doc);
  }
  return kExitOk;
}

int cmd_gradcheck(const DataFlags& f, TrainFlags& t, int probes, double h, double tol,
                  int graphs, std::ostream& out) {
  t.config.pooling = t.pool == "max" ? backbone::Pooling::max : backbone::Pooling::mean;
  t.config.seed = f.seed;
  t.config.validate();
  Dataset d = f.dataset_dir.empty() ? toy::random_graphs(graphs, 3, 7, 3, f.seed) : load(f);
  std::vector<int> ids;
  for (int i = 0; i < std::min<int>(graphs, static_cast<int>(d.graphs.size())); ++i) ids.push_back(i);
  const auto r = full_loss_gradcheck(d, ids, t.config, probes, h);
  out << "max relative error " << r.max_error << " (" << r.worst_param << "[" << r.worst_index
      << "] analytic " << r.worst_analytic << " numeric " << r.worst_numeric << ")\n";
  return r.max_error < tol ? kExitOk : kExitRuntime;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"OOD-GMixup training laboratory"};
  app.require_subcommand(1);

  DataFlags data;
  TrainFlags train_flags;
  std::string split_out;
  std::string evt_input;
  std::string evt_out;
  int evt_tail = 0;
  int probes = 50;
  double h = 1e-5;
  double tol = 1e-4;
  int gc_graphs = 5;

  auto* train_cmd = app.add_subcommand("train", "train a model and write a run report");
  add_data_flags(train_cmd, data, true);
  add_model_flags(train_cmd, train_flags.config, train_flags.pool);
  train_cmd->add_option("--method", train_flags.method, "erm or oodgmixup")
      ->check(CLI::IsMember({"erm", "oodgmixup"}));
  train_cmd->add_option("--out", train_flags.out_dir, "run directory");

  auto* stats_cmd = app.add_subcommand("split-stats", "build a biased split and print statistics");
  add_data_flags(stats_cmd, data, true);
  stats_cmd->add_option("--out", split_out, "write the split manifest here");

  auto* evt_cmd = app.add_subcommand("evt-fit", "fit a Weibull tail to one value per line");
  evt_cmd->add_option("--input", evt_input, "input file")->required();
  evt_cmd->add_option("--tail", evt_tail, "use only the largest values (0: all)");
  evt_cmd->add_option("--out", evt_out, "output document (default stdout)");

  auto* gc_cmd = app.add_subcommand("gradcheck", "finite-difference check of the full loss");
  add_data_flags(gc_cmd, data, false);
  add_model_flags(gc_cmd, train_flags.config, train_flags.pool);
  gc_cmd->add_option("--probes", probes, "coordinates to probe");
  gc_cmd->add_option("--step", h, "central-difference step");
  gc_cmd->add_option("--tol", tol, "maximum accepted relative error");
  gc_cmd->add_option("--graphs", gc_graphs, "graphs in the loss");

  app.set_config("--config", "",
                 "TOML/INI file with flag defaults under [train] / [split-stats]; flags win");
  for (auto* sub : {train_cmd, stats_cmd, evt_cmd, gc_cmd}) sub->fallthrough();

  std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (*train_cmd) return cmd_train(data, train_flags, out, err);
    if (*stats_cmd) return cmd_split_stats(data, split_out, out);
    if (*evt_cmd) return cmd_evt_fit(evt_input, evt_tail, evt_out, out);
    if (*gc_cmd) return cmd_gradcheck(data, train_flags, probes, h, tol, gc_graphs, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}

}  // namespace oodgmix
