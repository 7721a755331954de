#include "oodgmix/metric_head.hpp"

#include "oodgmix/errors.hpp"

namespace oodgmix {

PrototypeSet compute_prototypes(std::span<const Embedded> embeddings, int num_classes,
                                int epoch) {
  if (num_classes < 2) throw ContractError("prototypes need at least two classes");
  if (embeddings.empty()) throw TrainingError("no embeddings to build prototypes from");
  const Eigen::Index dim = embeddings.front().z.size();
  PrototypeSet out;
  out.epoch = epoch;
  out.prototypes = Eigen::MatrixXd::Zero(num_classes, dim);
  out.counts.assign(static_cast<size_t>(num_classes), 0);
  for (const auto& e : embeddings) {
    if (e.label < 0 || e.label >= num_classes) {
      throw ContractError("label " + std::to_string(e.label) + " outside [0, " +
                          std::to_string(num_classes) + ")");
    }
    if (e.z.size() != dim) throw ContractError("embeddings differ in length");
    out.prototypes.row(e.label) += e.z;
    ++out.counts[static_cast<size_t>(e.label)];
  }
  for (int k = 0; k < num_classes; ++k) {
    const int n = out.counts[static_cast<size_t>(k)];
    if (n == 0) throw TrainingError("class " + std::to_string(k) + " has no training embeddings");
    out.prototypes.row(k) /= static_cast<double>(n);
  }
  return out;
}

double sq_euclidean(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                    const Eigen::Ref<const Eigen::RowVectorXd>& b) {
  if (a.size() != b.size()) {
    throw ContractError("sq_euclidean: lengths " + std::to_string(a.size()) + " and " +
                        std::to_string(b.size()) + " differ");
  }
  return (a - b).squaredNorm();
}

Eigen::VectorXd prototype_distances(const Eigen::Ref<const Eigen::RowVectorXd>& z,
                                    const PrototypeSet& protos) {
  Eigen::VectorXd d(protos.num_classes());
  for (int k = 0; k < protos.num_classes(); ++k) d(k) = sq_euclidean(z, protos.prototypes.row(k));
  return d;
}

Eigen::VectorXd class_probabilities(const Eigen::Ref<const Eigen::RowVectorXd>& z,
                                    const PrototypeSet& protos) {
  const Eigen::VectorXd neg = -prototype_distances(z, protos);
  const Eigen::VectorXd e = (neg.array() - neg.maxCoeff()).exp();
  return e / e.sum();
}

int predict(const Eigen::Ref<const Eigen::RowVectorXd>& z, const PrototypeSet& protos) {
  const Eigen::VectorXd d = prototype_distances(z, protos);
  int best = 0;
  for (int k = 1; k < d.size(); ++k) {
    if (d(k) < d(best)) best = k;
  }
  return best;
}

diff::Var log_probability(const diff::Var& z, const PrototypeSet& protos, int label) {
  auto& tape = *z.tape();
  const Eigen::Index k = protos.num_classes();
  if (z.rows() != 1 || z.cols() != protos.prototypes.cols()) {
    throw ContractError("log_probability: embedding shape does not match prototypes");
  }
  const diff::Var tiled = diff::matmul(tape.constant(Eigen::MatrixXd::Ones(k, 1)), z);
  const diff::Var dist =
      diff::row_sum(diff::square(diff::sub(tiled, tape.constant(protos.prototypes))));
  const diff::Var logits = diff::scale(dist, -1.0);
  return diff::sub(diff::element(logits, label, 0), diff::log_sum_exp(logits));
}

}  // namespace oodgmix
