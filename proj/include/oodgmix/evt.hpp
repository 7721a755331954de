#pragma once

// Extreme-value calibration of virtual samples.
//
// For each class, the largest prototype distances of correctly classified
// training graphs are fitted with a Weibull law anchored just below the
// smallest tail value. A virtual sample's confidence is the Weibull CDF of
// its distance to its class prototype:
//
//   omega = 1 - exp(-((d - mu) / sigma)^xi),   0 for d <= mu
//
// and per-batch weights are omega / mean(omega).

#include "oodgmix/metric_head.hpp"
#include "oodgmix/mixup.hpp"

#include <span>
#include <vector>

namespace oodgmix::evt {

struct EvtModel {
  int class_index = -1;
  double mu = 0.0;     // location
  double sigma = 0.0;  // scale
  double xi = 0.0;     // shape
  int tail_size = 0;
  bool valid = false;
};

/// Confidence assigned to samples whose class has no valid model.
inline constexpr double kFallbackConfidence = 0.5;
/// Classes with fewer correctly classified training graphs get no model.
inline constexpr int kMinTail = 3;

/// For each class k: distances d(z, p_k) of training graphs labelled k that
/// predict() classifies correctly, largest first, truncated to tau. Empty
/// when fewer than kMinTail graphs qualify.
std::vector<std::vector<double>> collect_tail_distances(std::span<const Embedded> train,
                                                        const PrototypeSet& protos, int tau);

/// Maximum-likelihood Weibull fit to the tau largest values of `tail`.
///
/// Location mu = min - max(1e-3 * (max - min), 1e-6). The shape solves the
/// profile score equation on x = tail - mu by bracketed Newton iteration in
/// [0.05, 50], started from a moment estimate; if that does not converge in
/// 100 iterations or the root is not bracketed, a golden-section search on
/// the profile log-likelihood takes over. Scale follows in closed form.
/// Returns valid == false for fewer than 3 values or zero spread.
EvtModel weibull_fit_high(std::span<const double> tail, int tau, int class_index = -1);

/// Weibull CDF confidence; 0 at or below mu. Computed in log space.
/// Throws ContractError for an invalid model.
double ood_confidence(double d, const EvtModel& model);

/// Generalized Pareto CDF 1 - (1 + xi (x - mu) / sigma)^(-1/xi), with the
/// exponential limit for |xi| < 1e-8. Throws DomainError outside the support
/// or for sigma <= 0.
double gpd_cdf(double x, double mu, double sigma, double xi);

/// omega_bar = omega / max(mean(omega), 1e-8) over the batch.
void normalize_weights(std::span<VirtualSample> batch);

/// Fits one model per class from collect_tail_distances output.
std::vector<EvtModel> fit_class_models(const std::vector<std::vector<double>>& tails, int tau);

/// Confidence of distance d under the model of its class, with the fallback
/// for invalid models.
double class_confidence(double d, const EvtModel& model);

}  // namespace oodgmix::evt
