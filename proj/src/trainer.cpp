#include "oodgmix/trainer.hpp"

#include "oodgmix/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <utility>

namespace oodgmix {

std::string to_string(Method m) { return m == Method::erm ? "erm" : "oodgmixup"; }

Method parse_method(const std::string& s) {
  if (s == "erm") return Method::erm;
  if (s == "oodgmixup" || s == "ood_gmixup" || s == "ood-gmixup") return Method::ood_gmixup;
  throw ConfigError("unknown method '" + s + "' (expected erm|oodgmixup)");
}

void TrainConfig::validate() const {
  auto positive = [](bool ok, const char* field) {
    if (!ok) throw ConfigError(std::string(field) + " must be positive");
  };
  positive(epochs > 0, "epochs");
  positive(lr > 0.0, "lr");
  positive(batch_size > 0, "batch");
  positive(hidden_dim > 0, "hidden");
  positive(embed_dim > 0, "embed-dim");
  positive(mask_dim >= 0, "mask-dim");
  positive(alpha > 0.0, "alpha");
  positive(beta > 0.0, "beta");
  positive(tail_size > 0, "tail");
  positive(patience > 0, "patience");
  if (layers < 1 || layers > 3) throw ConfigError("layers must be 1, 2 or 3");
}

backbone::ModelShape TrainConfig::model_shape(int feature_dim) const {
  backbone::ModelShape s;
  s.feature_dim = feature_dim;
  s.mask_dim = mask_dim > 0 ? mask_dim : hidden_dim;
  s.hidden_dim = hidden_dim;
  s.layers = layers;
  s.embed_dim = embed_dim;
  s.pooling = pooling;
  return s;
}

// --- training view ------------------------------------------------------

TrainingView::TrainingView(const Dataset& dataset, std::vector<int> train_ids)
    : dataset_(dataset), ids_(std::move(train_ids)), num_classes_(dataset.num_classes) {
  for (int id : ids_) {
    if (id < 0 || id >= static_cast<int>(dataset.graphs.size())) {
      throw ContractError("training id " + std::to_string(id) + " out of range");
    }
  }
}

const Graph& TrainingView::graph(int position) const {
  const int id = ids_.at(static_cast<size_t>(position));
  touched_.insert(id);
  return dataset_.graphs[static_cast<size_t>(id)];
}

std::vector<Embedded> TrainingView::embed_all(const diff::ParamStore& store,
                                              const backbone::ModelShape& shape) const {
  std::vector<Embedded> out;
  out.reserve(ids_.size());
  for (size_t p = 0; p < ids_.size(); ++p) {
    const Graph& g = graph(static_cast<int>(p));
    out.push_back({backbone::embed(g, store, shape), g.label, g.id});
  }
  return out;
}

// --- losses -------------------------------------------------------------

diff::Var mixup_batch_loss(diff::Binder& bind, const Dataset& dataset,
                           std::span<const MixedTerm> terms, const PrototypeSet& protos,
                           const backbone::ModelShape& shape) {
  if (terms.empty()) throw ContractError("mixup_batch_loss: empty batch");
  std::map<int, diff::Var> encoded;
  auto z_of = [&](int id) {
    auto it = encoded.find(id);
    if (it != encoded.end()) return it->second;
    const diff::Var z = backbone::encode(bind, dataset.graphs.at(static_cast<size_t>(id)), shape);
    encoded.emplace(id, z);
    return z;
  };
  diff::Var total;
  bool first = true;
  for (const auto& t : terms) {
    const diff::Var z_mix =
        diff::add(diff::scale(z_of(t.graph_i), t.lambda), diff::scale(z_of(t.graph_j), 1.0 - t.lambda));
    const diff::Var term = diff::scale(log_probability(z_mix, protos, t.label), -t.weight);
    total = first ? term : diff::add(total, term);
    first = false;
  }
  return total;
}

diff::Var erm_batch_loss(diff::Binder& bind, const Dataset& dataset, std::span<const int> ids,
                         const PrototypeSet& protos, const backbone::ModelShape& shape) {
  if (ids.empty()) throw ContractError("erm_batch_loss: empty batch");
  diff::Var total;
  bool first = true;
  for (int id : ids) {
    const Graph& g = dataset.graphs.at(static_cast<size_t>(id));
    const diff::Var term =
        diff::scale(log_probability(backbone::encode(bind, g, shape), protos, g.label), -1.0);
    total = first ? term : diff::add(total, term);
    first = false;
  }
  return total;
}

double evaluate(const Dataset& dataset, std::span<const int> ids, const diff::ParamStore& store,
                const backbone::ModelShape& shape, const PrototypeSet& protos) {
  if (ids.empty()) return 0.0;
  int correct = 0;
  for (int id : ids) {
    const Graph& g = dataset.graphs.at(static_cast<size_t>(id));
    if (predict(backbone::embed(g, store, shape), protos) == g.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(ids.size());
}

// --- training loop ------------------------------------------------------

namespace {

double accuracy_of(std::span<const Embedded> emb, const PrototypeSet& protos) {
  if (emb.empty()) return 0.0;
  int correct = 0;
  for (const auto& e : emb) correct += predict(e.z, protos) == e.label ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(emb.size());
}

// Virtual samples for one epoch, scored against the epoch-start prototypes.
std::vector<VirtualSample> score_virtual_samples(std::span<const Embedded> emb,
                                                 const PrototypeSet& protos,
                                                 const std::vector<evt::EvtModel>& models,
                                                 const TrainConfig& cfg, int count, Rng& rng) {
  MixupConfig mc;
  mc.alpha = cfg.alpha;
  mc.beta = cfg.beta;
  mc.virtual_count = count;
  auto samples = generate_virtual_batch(emb, protos.num_classes(), mc, rng);
  for (auto& s : samples) {
    const double d = sq_euclidean(s.z_tilde, protos.prototypes.row(s.label));
    s.omega = evt::class_confidence(d, models[static_cast<size_t>(s.label)]);
  }
  return samples;
}

Histogram confidence_histogram(const Dataset& dataset, std::span<const int> ids,
                               const diff::ParamStore& store, const backbone::ModelShape& shape,
                               const PrototypeSet& protos,
                               const std::vector<evt::EvtModel>& models) {
  constexpr int kBins = 10;
  Histogram h;
  for (int b = 0; b <= kBins; ++b) h.edges.push_back(static_cast<double>(b) / kBins);
  h.counts.assign(kBins, 0);
  for (int id : ids) {
    const Eigen::RowVectorXd z = backbone::embed(dataset.graphs[static_cast<size_t>(id)], store, shape);
    const int k = predict(z, protos);
    const double w = evt::class_confidence(sq_euclidean(z, protos.prototypes.row(k)),
                                           models[static_cast<size_t>(k)]);
    const int bin = std::min(kBins - 1, static_cast<int>(w * kBins));
    ++h.counts[static_cast<size_t>(bin)];
  }
  return h;
}

void check_split(const Dataset& dataset, const Split& split) {
  if (split.train.empty() || split.val.empty()) throw ConfigError("split has empty train or val");
  std::vector<int> seen(dataset.graphs.size(), 0);
  for (const auto* part : {&split.train, &split.val, &split.test}) {
    for (int id : *part) {
      if (id < 0 || id >= static_cast<int>(dataset.graphs.size())) {
        throw ConfigError("split references unknown graph id " + std::to_string(id));
      }
      if (seen[static_cast<size_t>(id)]++ > 0) {
        throw ConfigError("graph " + std::to_string(id) + " appears in more than one partition");
      }
    }
  }
  std::vector<int> per_class(static_cast<size_t>(dataset.num_classes), 0);
  for (int id : split.train) ++per_class[static_cast<size_t>(dataset.graphs[static_cast<size_t>(id)].label)];
  for (int k = 0; k < dataset.num_classes; ++k) {
    if (per_class[static_cast<size_t>(k)] == 0) {
      throw ConfigError("class " + std::to_string(k) + " is missing from the training split");
    }
  }
}

}  // namespace

RunReport train(const Dataset& dataset, const Split& split, const TrainConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  config.validate();
  check_split(dataset, split);
  if (dataset.feature_dim < 1) throw ConfigError("dataset has no node features");

  RunReport report;
  report.config = config;
  report.dataset = dataset.name;
  report.label_map = dataset.label_map;

  const auto shape = config.model_shape(dataset.feature_dim);
  Rng init_rng(config.seed);
  diff::ParamStore store;
  backbone::init_model(store, shape, init_rng);
  Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  const TrainingView view(dataset, split.train);
  const int n_train = static_cast<int>(view.ids().size());
  const int K = dataset.num_classes;

  std::vector<Embedded> train_emb = view.embed_all(store, shape);
  double best_val = -1.0;
  int since_best = 0;
  diff::ParamStore::Snapshot best_params = store.snapshot();

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    const PrototypeSet protos = compute_prototypes(train_emb, K, epoch);

    double loss_sum = 0.0;
    auto step = [&](diff::Tape& tape, const diff::Var& loss) {
      const double value = loss.scalar();
      if (!std::isfinite(value)) {
        report.status = "diverged";
        report.diagnostic = "non-finite loss at epoch " + std::to_string(epoch) + " after " +
                            std::to_string(store.adam_steps()) + " optimizer steps";
        report.epochs.push_back(rec);
        const auto t1 = std::chrono::steady_clock::now();
        report.wall_clock_seconds = std::chrono::duration<double>(t1 - t0).count();
        throw TrainingDiverged(report.diagnostic, report);
      }
      loss_sum += value;
      tape.backward(loss);
      diff::adam_step(store, config.lr);
    };

    if (config.method == Method::ood_gmixup) {
      rec.evt = evt::fit_class_models(evt::collect_tail_distances(train_emb, protos, config.tail_size),
                                      config.tail_size);
      auto samples = score_virtual_samples(train_emb, protos, rec.evt, config, n_train, rng);
      double omega_sum = 0.0;
      for (const auto& s : samples) {
        omega_sum += s.omega;
        rec.omega_max = std::max(rec.omega_max, s.omega);
      }
      rec.omega_mean = omega_sum / static_cast<double>(samples.size());

      for (size_t start = 0; start < samples.size(); start += static_cast<size_t>(config.batch_size)) {
        const size_t end = std::min(samples.size(), start + static_cast<size_t>(config.batch_size));
        std::span<VirtualSample> batch(samples.data() + start, end - start);
        evt::normalize_weights(batch);
        std::vector<MixedTerm> terms;
        terms.reserve(batch.size());
        for (const auto& s : batch) {
          terms.push_back({train_emb[static_cast<size_t>(s.source_i)].graph_id,
                           train_emb[static_cast<size_t>(s.source_j)].graph_id, s.lambda, s.label,
                           s.omega_bar});
        }
        diff::Tape tape;
        diff::Binder bind(tape, store);
        step(tape, mixup_batch_loss(bind, dataset, terms, protos, shape));
      }
    } else {
      std::vector<int> order(view.ids().begin(), view.ids().end());
      std::shuffle(order.begin(), order.end(), rng);
      for (size_t start = 0; start < order.size(); start += static_cast<size_t>(config.batch_size)) {
        const size_t end = std::min(order.size(), start + static_cast<size_t>(config.batch_size));
        diff::Tape tape;
        diff::Binder bind(tape, store);
        step(tape, erm_batch_loss(bind, dataset, std::span<const int>(order.data() + start, end - start),
                                  protos, shape));
      }
    }
    rec.train_loss = loss_sum / static_cast<double>(n_train);

    // Fresh prototypes from the updated parameters; these embeddings also
    // seed the next epoch.
    train_emb = view.embed_all(store, shape);
    const PrototypeSet fresh = compute_prototypes(train_emb, K, epoch);
    rec.train_accuracy = accuracy_of(train_emb, fresh);
    rec.val_accuracy = evaluate(dataset, split.val, store, shape, fresh);
    report.epochs.push_back(rec);

    if (rec.val_accuracy > best_val) {
      best_val = rec.val_accuracy;
      report.best_epoch = epoch;
      best_params = store.snapshot();
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }

  store.restore(best_params);
  train_emb = view.embed_all(store, shape);
  const PrototypeSet final_protos = compute_prototypes(train_emb, K, report.best_epoch);
  const auto final_models = evt::fit_class_models(
      evt::collect_tail_distances(train_emb, final_protos, config.tail_size), config.tail_size);
  report.best_val_accuracy = best_val;
  report.final_train_accuracy = accuracy_of(train_emb, final_protos);
  report.test_accuracy = evaluate(dataset, split.test, store, shape, final_protos);
  report.test_confidence =
      confidence_histogram(dataset, split.test, store, shape, final_protos, final_models);

  const std::set<int> train_set(split.train.begin(), split.train.end());
  report.leakage_check_passed = std::includes(train_set.begin(), train_set.end(),
                                              view.touched().begin(), view.touched().end());
  if (!report.leakage_check_passed) {
    throw TrainingError("prototype/EVT inputs included graphs outside the training split");
  }

  const auto t1 = std::chrono::steady_clock::now();
  report.wall_clock_seconds = std::chrono::duration<double>(t1 - t0).count();
  return report;
}

RunReport train_erm(const Dataset& dataset, const Split& split, TrainConfig config) {
  config.method = Method::erm;
  return train(dataset, split, config);
}

diff::GradCheckResult full_loss_gradcheck(const Dataset& dataset, std::span<const int> ids,
                                          const TrainConfig& config, int probes, double h,
                                          bool randomize_weights) {
  config.validate();
  const auto shape = config.model_shape(dataset.feature_dim);
  Rng init_rng(config.seed);
  diff::ParamStore store;
  backbone::init_model(store, shape, init_rng);
  Rng rng(config.seed + 1);

  const TrainingView view(dataset, std::vector<int>(ids.begin(), ids.end()));
  const auto emb = view.embed_all(store, shape);
  const PrototypeSet protos = compute_prototypes(emb, dataset.num_classes);
  const auto models = evt::fit_class_models(
      evt::collect_tail_distances(emb, protos, config.tail_size), config.tail_size);
  auto samples =
      score_virtual_samples(emb, protos, models, config, static_cast<int>(emb.size()), rng);
  if (randomize_weights) {
    std::uniform_real_distribution<double> u(0.05, 1.0);
    for (auto& s : samples) s.omega = u(rng);
  }
  evt::normalize_weights(samples);
  std::vector<MixedTerm> terms;
  for (const auto& s : samples) {
    terms.push_back({emb[static_cast<size_t>(s.source_i)].graph_id,
                     emb[static_cast<size_t>(s.source_j)].graph_id, s.lambda, s.label,
                     s.omega_bar});
  }
  const diff::LossFn loss = [&](diff::Tape& tape) {
    diff::Binder bind(tape, store);
    return mixup_batch_loss(bind, dataset, terms, protos, shape);
  };
  return diff::finite_diff_check(loss, store, probes, h, config.seed + 2);
}

}  // namespace oodgmix
