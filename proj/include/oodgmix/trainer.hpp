#pragma once

#include "oodgmix/backbone.hpp"
#include "oodgmix/diff.hpp"
#include "oodgmix/errors.hpp"
#include "oodgmix/evt.hpp"
#include "oodgmix/graph.hpp"
#include "oodgmix/metric_head.hpp"
#include "oodgmix/mixup.hpp"
#include "oodgmix/split.hpp"

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace oodgmix {

enum class Method { erm, ood_gmixup };

std::string to_string(Method m);
Method parse_method(const std::string& s);  // "erm" | "oodgmixup" | "ood_gmixup"

struct TrainConfig {
  Method method = Method::ood_gmixup;
  int epochs = 200;
  double lr = 0.001;
  int batch_size = 32;
  int hidden_dim = 64;
  int layers = 2;
  int embed_dim = 64;
  int mask_dim = 0;  // 0: same as hidden_dim
  backbone::Pooling pooling = backbone::Pooling::mean;
  double alpha = 2.0;
  double beta = 2.0;
  int tail_size = 20;
  int patience = 20;
  std::uint64_t seed = 0;

  void validate() const;  // ConfigError naming the offending field
  backbone::ModelShape model_shape(int feature_dim) const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;  // mean per-sample loss over the epoch's batches
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
  std::vector<evt::EvtModel> evt;  // empty for ERM
  double omega_mean = 0.0;
  double omega_max = 0.0;
};

struct Histogram {
  std::vector<double> edges;  // bins + 1 entries
  std::vector<int> counts;
};

struct RunReport {
  TrainConfig config;
  std::string dataset;
  std::string split_manifest;
  std::vector<std::int64_t> label_map;
  std::string density_convention = "edges counted as directed entries (2m); density = 2m/n";
  std::vector<EpochRecord> epochs;
  int best_epoch = -1;
  double best_val_accuracy = 0.0;
  double test_accuracy = 0.0;
  double final_train_accuracy = 0.0;
  Histogram test_confidence;
  bool leakage_check_passed = false;
  std::string status = "ok";
  std::string diagnostic;
  double wall_clock_seconds = 0.0;
};

/// Non-finite loss. Carries the report up to the failing batch.
class TrainingDiverged : public TrainingError {
 public:
  TrainingDiverged(const std::string& what, RunReport report)
      : TrainingError(what), report_(std::move(report)) {}
  const RunReport& report() const { return report_; }

 private:
  RunReport report_;
};

/// Only the training partition, so everything that fits prototypes, EVT
/// models or virtual samples cannot see validation or test graphs. Records
/// every graph id it hands out.
class TrainingView {
 public:
  TrainingView(const Dataset& dataset, std::vector<int> train_ids);

  std::span<const int> ids() const { return ids_; }
  int num_classes() const { return num_classes_; }
  const Graph& graph(int position) const;

  std::vector<Embedded> embed_all(const diff::ParamStore& store,
                                  const backbone::ModelShape& shape) const;

  const std::set<int>& touched() const { return touched_; }

 private:
  const Dataset& dataset_;
  std::vector<int> ids_;
  int num_classes_;
  mutable std::set<int> touched_;
};

/// One term of the reweighted batch loss: graphs i and j mixed with lambda.
struct MixedTerm {
  int graph_i = 0;
  int graph_j = 0;
  double lambda = 1.0;
  int label = 0;
  double weight = 1.0;  // omega_bar, constant w.r.t. gradients
};

/// -sum_t weight_t * log p(label_t | lambda_t z_i + (1 - lambda_t) z_j),
/// with z recomputed through the encoder so gradients reach all parameters.
diff::Var mixup_batch_loss(diff::Binder& bind, const Dataset& dataset,
                           std::span<const MixedTerm> terms, const PrototypeSet& protos,
                           const backbone::ModelShape& shape);

/// -sum_i log p(y_i | z_i) over real graphs.
diff::Var erm_batch_loss(diff::Binder& bind, const Dataset& dataset, std::span<const int> ids,
                         const PrototypeSet& protos, const backbone::ModelShape& shape);

/// Fraction of `ids` whose nearest prototype matches the label.
double evaluate(const Dataset& dataset, std::span<const int> ids, const diff::ParamStore& store,
                const backbone::ModelShape& shape, const PrototypeSet& protos);

RunReport train(const Dataset& dataset, const Split& split, const TrainConfig& config);
RunReport train_erm(const Dataset& dataset, const Split& split, TrainConfig config);

/// Central-difference check of the full reweighted mixup loss on the graphs
/// in `ids` (prototypes, EVT fits and weights computed as in training and
/// then held constant). When `randomize_weights` is set the weights are
/// replaced by random positive values so the reweighting is exercised even
/// when every EVT model falls back.
diff::GradCheckResult full_loss_gradcheck(const Dataset& dataset, std::span<const int> ids,
                                          const TrainConfig& config, int probes, double h,
                                          bool randomize_weights = true);

}  // namespace oodgmix
