#include "oodgmix/report.hpp"

#include "oodgmix/errors.hpp"

namespace oodgmix {

using nlohmann::json;

json to_json(const TrainConfig& c) {
  return json{{"method", to_string(c.method)},
              {"epochs", c.epochs},
              {"lr", c.lr},
              {"batch", c.batch_size},
              {"hidden", c.hidden_dim},
              {"layers", c.layers},
              {"embed_dim", c.embed_dim},
              {"mask_dim", c.mask_dim},
              {"pool", c.pooling == backbone::Pooling::mean ? "mean" : "max"},
              {"alpha", c.alpha},
              {"beta", c.beta},
              {"tail", c.tail_size},
              {"patience", c.patience},
              {"seed", c.seed}};
}

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  c.method = parse_method(j.at("method").get<std::string>());
  c.epochs = j.at("epochs").get<int>();
  c.lr = j.at("lr").get<double>();
  c.batch_size = j.at("batch").get<int>();
  c.hidden_dim = j.at("hidden").get<int>();
  c.layers = j.at("layers").get<int>();
  c.embed_dim = j.at("embed_dim").get<int>();
  c.mask_dim = j.at("mask_dim").get<int>();
  c.pooling = j.at("pool").get<std::string>() == "max" ? backbone::Pooling::max
                                                        : backbone::Pooling::mean;
  c.alpha = j.at("alpha").get<double>();
  c.beta = j.at("beta").get<double>();
  c.tail_size = j.at("tail").get<int>();
  c.patience = j.at("patience").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

json to_json(const evt::EvtModel& m) {
  return json{{"class", m.class_index}, {"mu", m.mu},           {"sigma", m.sigma},
              {"xi", m.xi},             {"tail_size", m.tail_size}, {"valid", m.valid}};
}

evt::EvtModel evt_model_from_json(const json& j) {
  evt::EvtModel m;
  m.class_index = j.at("class").get<int>();
  m.mu = j.at("mu").get<double>();
  m.sigma = j.at("sigma").get<double>();
  m.xi = j.at("xi").get<double>();
  m.tail_size = j.at("tail_size").get<int>();
  m.valid = j.at("valid").get<bool>();
  return m;
}

namespace {

json partition_json(const PartitionStats& p) {
  return json{{"graphs", p.graphs},
              {"avg_nodes", p.avg_nodes},
              {"avg_edges", p.avg_edges},
              {"avg_density", p.avg_density}};
}

}  // namespace

json to_json(const SplitStats& s) {
  return json{{"train", partition_json(s.train)},
              {"val", partition_json(s.val)},
              {"test", partition_json(s.test)}};
}

json to_json(const RunReport& r) {
  json epochs = json::array();
  for (const auto& e : r.epochs) {
    json evt_models = json::array();
    for (const auto& m : e.evt) evt_models.push_back(to_json(m));
    epochs.push_back(json{{"epoch", e.epoch},
                          {"train_loss", e.train_loss},
                          {"train_accuracy", e.train_accuracy},
                          {"val_accuracy", e.val_accuracy},
                          {"evt", evt_models},
                          {"omega_mean", e.omega_mean},
                          {"omega_max", e.omega_max}});
  }
  return json{{"config", to_json(r.config)},
              {"dataset", r.dataset},
              {"split_manifest", r.split_manifest},
              {"label_map", r.label_map},
              {"density_convention", r.density_convention},
              {"epochs", epochs},
              {"best_epoch", r.best_epoch},
              {"best_val_accuracy", r.best_val_accuracy},
              {"test_accuracy", r.test_accuracy},
              {"final_train_accuracy", r.final_train_accuracy},
              {"test_confidence_histogram",
               json{{"edges", r.test_confidence.edges}, {"counts", r.test_confidence.counts}}},
              {"leakage_check_passed", r.leakage_check_passed},
              {"status", r.status},
              {"diagnostic", r.diagnostic},
              {"wall_clock_seconds", r.wall_clock_seconds}};
}

RunReport report_from_json(const json& j) {
  RunReport r;
  r.config = config_from_json(j.at("config"));
  r.dataset = j.at("dataset").get<std::string>();
  r.split_manifest = j.at("split_manifest").get<std::string>();
  r.label_map = j.at("label_map").get<std::vector<std::int64_t>>();
  r.density_convention = j.at("density_convention").get<std::string>();
  for (const auto& e : j.at("epochs")) {
    EpochRecord rec;
    rec.epoch = e.at("epoch").get<int>();
    rec.train_loss = e.at("train_loss").get<double>();
    rec.train_accuracy = e.at("train_accuracy").get<double>();
    rec.val_accuracy = e.at("val_accuracy").get<double>();
    for (const auto& m : e.at("evt")) rec.evt.push_back(evt_model_from_json(m));
    rec.omega_mean = e.at("omega_mean").get<double>();
    rec.omega_max = e.at("omega_max").get<double>();
    r.epochs.push_back(std::move(rec));
  }
  r.best_epoch = j.at("best_epoch").get<int>();
  r.best_val_accuracy = j.at("best_val_accuracy").get<double>();
  r.test_accuracy = j.at("test_accuracy").get<double>();
  r.final_train_accuracy = j.at("final_train_accuracy").get<double>();
  const auto& h = j.at("test_confidence_histogram");
  r.test_confidence.edges = h.at("edges").get<std::vector<double>>();
  r.test_confidence.counts = h.at("counts").get<std::vector<int>>();
  r.leakage_check_passed = j.at("leakage_check_passed").get<bool>();
  r.status = j.at("status").get<std::string>();
  r.diagnostic = j.at("diagnostic").get<std::string>();
  r.wall_clock_seconds = j.at("wall_clock_seconds").get<double>();
  return r;
}

std::string serialize_report(const RunReport& report) { return to_json(report).dump(2) + "\n"; }

RunReport parse_report(const std::string& text) {
  try {
    return report_from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw ParseError(std::string("report: ") + e.what());
  }
}

std::string serialize_report_without_timing(RunReport report) {
  report.wall_clock_seconds = 0.0;
  return serialize_report(report);
}

}  // namespace oodgmix
