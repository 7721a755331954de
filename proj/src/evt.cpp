#include "oodgmix/evt.hpp"

#include "oodgmix/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>

namespace oodgmix::evt {

std::vector<std::vector<double>> collect_tail_distances(std::span<const Embedded> train,
                                                        const PrototypeSet& protos, int tau) {
  if (tau < 1) throw ContractError("tail size must be at least 1");
  std::vector<std::vector<double>> tails(static_cast<size_t>(protos.num_classes()));
  for (const auto& e : train) {
    if (predict(e.z, protos) != e.label) continue;
    tails[static_cast<size_t>(e.label)].push_back(sq_euclidean(e.z, protos.prototypes.row(e.label)));
  }
  for (auto& t : tails) {
    if (static_cast<int>(t.size()) < kMinTail) {
      t.clear();
      continue;
    }
    std::sort(t.begin(), t.end(), std::greater<>());
    if (static_cast<int>(t.size()) > tau) t.resize(static_cast<size_t>(tau));
  }
  return tails;
}

namespace {

constexpr double kShapeLo = 0.05;
constexpr double kShapeHi = 50.0;
constexpr int kNewtonIterations = 100;

// Shifted values normalised by their maximum; the shape equation and the
// profile likelihood only depend on u = x / max(x).
struct Normalized {
  std::vector<double> log_u;
  double mean_log_u = 0.0;
  double x_max = 0.0;
};

struct Moments {
  double s0 = 0.0;  // sum u^k
  double s1 = 0.0;  // sum u^k ln u
  double s2 = 0.0;  // sum u^k ln^2 u
};

Moments moments(const Normalized& d, double shape) {
  Moments m;
  for (double lu : d.log_u) {
    const double w = std::exp(shape * lu);
    m.s0 += w;
    m.s1 += w * lu;
    m.s2 += w * lu * lu;
  }
  return m;
}

// Increasing in shape; its root is the MLE.
double score(const Normalized& d, double shape) {
  const auto m = moments(d, shape);
  return m.s1 / m.s0 - 1.0 / shape - d.mean_log_u;
}

double score_slope(const Normalized& d, double shape) {
  const auto m = moments(d, shape);
  const double mean = m.s1 / m.s0;
  return m.s2 / m.s0 - mean * mean + 1.0 / (shape * shape);
}

// Profile log-likelihood up to the additive constant -n ln(x_max) - n.
double profile_log_likelihood(const Normalized& d, double shape) {
  const double n = static_cast<double>(d.log_u.size());
  const auto m = moments(d, shape);
  return n * std::log(shape) - n * std::log(m.s0 / n) + (shape - 1.0) * n * d.mean_log_u;
}

std::optional<double> newton_shape(const Normalized& d, double start) {
  double lo = kShapeLo;
  double hi = kShapeHi;
  if (score(d, lo) > 0.0 || score(d, hi) < 0.0) return std::nullopt;
  double k = std::clamp(start, lo, hi);
  for (int it = 0; it < kNewtonIterations; ++it) {
    const double g = score(d, k);
    if (!std::isfinite(g)) return std::nullopt;
    if (g == 0.0) return k;
    if (g < 0.0) lo = k; else hi = k;
    double next = k - g / score_slope(d, k);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - k) <= 1e-13 * k || hi - lo <= 1e-13 * k) return next;
    k = next;
  }
  return std::nullopt;
}

std::optional<double> golden_section_shape(const Normalized& d) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = std::log(kShapeLo);
  double b = std::log(kShapeHi);
  auto f = [&](double log_k) { return profile_log_likelihood(d, std::exp(log_k)); };
  double c = b - inv_phi * (b - a);
  double e = a + inv_phi * (b - a);
  double fc = f(c);
  double fe = f(e);
  for (int it = 0; it < 200 && b - a > 1e-12; ++it) {
    if (fc > fe) {
      b = e;
      e = c;
      fe = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = e;
      fc = fe;
      e = a + inv_phi * (b - a);
      fe = f(e);
    }
  }
  const double k = std::exp(0.5 * (a + b));
  if (!std::isfinite(profile_log_likelihood(d, k))) return std::nullopt;
  return k;
}

}  // namespace

EvtModel weibull_fit_high(std::span<const double> tail, int tau, int class_index) {
  EvtModel model;
  model.class_index = class_index;
  if (tau < 1) throw ContractError("tail size must be at least 1");

  std::vector<double> values(tail.begin(), tail.end());
  std::sort(values.begin(), values.end(), std::greater<>());
  if (static_cast<int>(values.size()) > tau) values.resize(static_cast<size_t>(tau));
  model.tail_size = static_cast<int>(values.size());
  if (values.size() < static_cast<size_t>(kMinTail)) return model;
  if (!std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); })) {
    return model;
  }
  const double hi = values.front();
  const double lo = values.back();
  if (!(hi > lo)) return model;

  model.mu = lo - std::max(1e-3 * (hi - lo), 1e-6);

  Normalized d;
  d.x_max = hi - model.mu;
  d.log_u.reserve(values.size());
  for (double v : values) d.log_u.push_back(std::log((v - model.mu) / d.x_max));
  const double n = static_cast<double>(values.size());
  d.mean_log_u = std::accumulate(d.log_u.begin(), d.log_u.end(), 0.0) / n;

  // Moment start: shape ~ cv^-1.086 for the Weibull family.
  double mean = 0.0;
  for (double v : values) mean += v - model.mu;
  mean /= n;
  double var = 0.0;
  for (double v : values) var += (v - model.mu - mean) * (v - model.mu - mean);
  var /= n;
  const double cv = std::sqrt(var) / mean;
  const double start = cv > 0.0 ? std::clamp(std::pow(cv, -1.086), kShapeLo, kShapeHi) : 1.0;

  auto shape = newton_shape(d, start);
  if (!shape) shape = golden_section_shape(d);
  if (!shape) return model;

  const auto m = moments(d, *shape);
  model.xi = *shape;
  model.sigma = d.x_max * std::pow(m.s0 / n, 1.0 / model.xi);
  model.valid = std::isfinite(model.sigma) && model.sigma > 0.0 && model.xi > 0.0;
  return model;
}

double ood_confidence(double d, const EvtModel& model) {
  if (!model.valid) throw ContractError("ood_confidence: invalid EVT model");
  if (d <= model.mu) return 0.0;
  const double t = model.xi * std::log((d - model.mu) / model.sigma);
  return -std::expm1(-std::exp(t));
}

double class_confidence(double d, const EvtModel& model) {
  return model.valid ? ood_confidence(d, model) : kFallbackConfidence;
}

double gpd_cdf(double x, double mu, double sigma, double xi) {
  if (!(sigma > 0.0)) throw DomainError("gpd_cdf: scale must be positive");
  const double t = (x - mu) / sigma;
  if (std::abs(xi) < 1e-8) return -std::expm1(-t);
  const double base = 1.0 + xi * t;
  if (!(base > 0.0)) throw DomainError("gpd_cdf: x outside the support");
  return -std::expm1(-std::log1p(xi * t) / xi);
}

void normalize_weights(std::span<VirtualSample> batch) {
  if (batch.empty()) throw ContractError("normalize_weights: empty batch");
  long double total = 0.0L;
  for (const auto& s : batch) total += s.omega;
  const long double denom =
      std::max(total / static_cast<long double>(batch.size()), static_cast<long double>(1e-8));
  for (auto& s : batch) s.omega_bar = static_cast<double>(s.omega / denom);
}

std::vector<EvtModel> fit_class_models(const std::vector<std::vector<double>>& tails, int tau) {
  std::vector<EvtModel> models;
  models.reserve(tails.size());
  for (size_t k = 0; k < tails.size(); ++k) {
    models.push_back(weibull_fit_high(tails[k], tau, static_cast<int>(k)));
  }
  return models;
}

}  // namespace oodgmix::evt
