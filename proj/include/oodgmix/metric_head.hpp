#pragma once

// Prototype classifier over squared Euclidean distance.

#include "oodgmix/diff.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace oodgmix {

struct Embedded {
  Eigen::RowVectorXd z;
  int label = 0;
  int graph_id = -1;
};

struct PrototypeSet {
  Eigen::MatrixXd prototypes;  // K x M, row k is the mean of class k
  std::vector<int> counts;     // N_k
  int epoch = -1;

  int num_classes() const { return static_cast<int>(prototypes.rows()); }
};

/// Per-class arithmetic means. Throws TrainingError naming the first class
/// with no embeddings. Requires num_classes >= 2.
PrototypeSet compute_prototypes(std::span<const Embedded> embeddings, int num_classes,
                                int epoch = -1);

/// Sum of squared differences; ContractError on length mismatch.
double sq_euclidean(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                    const Eigen::Ref<const Eigen::RowVectorXd>& b);

Eigen::VectorXd prototype_distances(const Eigen::Ref<const Eigen::RowVectorXd>& z,
                                    const PrototypeSet& protos);

/// softmax(-d) with the max shifted out.
Eigen::VectorXd class_probabilities(const Eigen::Ref<const Eigen::RowVectorXd>& z,
                                    const PrototypeSet& protos);

/// Nearest prototype; ties go to the lowest class index.
int predict(const Eigen::Ref<const Eigen::RowVectorXd>& z, const PrototypeSet& protos);

/// Differentiable log p(label | z) for a 1 x M embedding, prototypes held
/// constant.
diff::Var log_probability(const diff::Var& z, const PrototypeSet& protos, int label);

}  // namespace oodgmix
