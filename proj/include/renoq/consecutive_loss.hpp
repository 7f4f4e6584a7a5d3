#pragma once

// Exponential-service queue with state-dependent (RED-style) drop
// probabilities and the distribution of loss-run lengths between accepted
// arrivals.

#include <cmath>
#include <vector>

#include "renoq/model.hpp"

namespace renoq {

/// `capacity` is the total number of places including the server; an arrival
/// that sees n customers is dropped with probability drop[n], and
/// drop[capacity] must be 1.
struct RedModel {
  double lambda = 1.0;
  double mu = 1.0;
  int capacity = 1;
  std::vector<double> drop{0.0, 1.0};

  double delta() const { return lambda / (lambda + mu); }
};

inline const RedModel& validate(const RedModel& model) {
  if (!(model.lambda > 0.0) || !(model.mu > 0.0) || !std::isfinite(model.lambda) || !std::isfinite(model.mu)) {
    throw Error(ErrorCode::NegativeRate, "rates must be positive");
  }
  if (model.capacity < 1) throw Error(ErrorCode::CapacityTooSmall, "capacity must be at least 1");
  if (model.drop.size() != static_cast<std::size_t>(model.capacity) + 1) {
    throw Error(ErrorCode::BadProbabilityVector, "drop vector must have capacity + 1 entries");
  }
  for (double v : model.drop) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::BadProbabilityVector, "drop probability outside [0,1]");
  }
  if (model.drop.back() != 1.0) {
    throw Error(ErrorCode::BadProbabilityVector, "an arrival seeing a full system must be dropped");
  }
  return model;
}

/// Linear RED profile: 0 below min_th, rising to p_max at max_th, 1 above.
inline std::vector<double> red_drop_profile(int min_th, int max_th, double p_max, int capacity) {
  if (!(0 <= min_th && min_th < max_th && max_th <= capacity)) {
    throw Error(ErrorCode::BadThresholds, "need 0 <= min_th < max_th <= capacity");
  }
  if (!(p_max > 0.0 && p_max <= 1.0)) throw Error(ErrorCode::BadThresholds, "p_max must lie in (0,1]");
  std::vector<double> d(static_cast<std::size_t>(capacity) + 1, 0.0);
  for (int n = 0; n <= capacity; ++n) {
    double v = 0.0;
    if (n > max_th) {
      v = 1.0;
    } else if (n >= min_th) {
      v = p_max * (n - min_th) / static_cast<double>(max_th - min_th);
    }
    d[static_cast<std::size_t>(n)] = v;
  }
  d.back() = 1.0;
  return d;
}

/// Birth-death stationary law, P_n proportional to prod_{m<n} lambda (1 - d_m) / mu.
inline std::vector<double> red_stationary(const RedModel& model) {
  validate(model);
  const int c = model.capacity;
  std::vector<double> logw(static_cast<std::size_t>(c) + 1, 0.0);
  std::vector<bool> zero(static_cast<std::size_t>(c) + 1, false);
  const double base = std::log(model.lambda / model.mu);
  for (int n = 1; n <= c; ++n) {
    const double admit = 1.0 - model.drop[static_cast<std::size_t>(n - 1)];
    zero[static_cast<std::size_t>(n)] = zero[static_cast<std::size_t>(n - 1)] || admit <= 0.0;
    logw[static_cast<std::size_t>(n)] =
        zero[static_cast<std::size_t>(n)] ? 0.0 : logw[static_cast<std::size_t>(n - 1)] + base + std::log(admit);
  }
  double peak = -INFINITY;
  for (int n = 0; n <= c; ++n) {
    if (!zero[static_cast<std::size_t>(n)]) peak = std::max(peak, logw[static_cast<std::size_t>(n)]);
  }
  std::vector<double> p(static_cast<std::size_t>(c) + 1, 0.0);
  double total = 0.0;
  for (int n = 0; n <= c; ++n) {
    if (zero[static_cast<std::size_t>(n)]) continue;
    p[static_cast<std::size_t>(n)] = std::exp(logw[static_cast<std::size_t>(n)] - peak);
    total += p[static_cast<std::size_t>(n)];
  }
  for (double& v : p) v /= total;
  return p;
}

struct ClDistribution {
  std::vector<double> pmf;  // P{L=1}..P{L=k_max}
  double delta = 0.0;
  double deficit = 1.0;     // 1 - sum(pmf)
};

inline constexpr int kDefaultKmax = 200;

/// Run-length law of losses between two accepted arrivals, conditional on the
/// run being nonempty. accepted[k][i] is the probability that, with i
/// customers present, the next k-1 arrivals are dropped and the k-th is
/// admitted.
inline ClDistribution cl_distribution(const RedModel& model, std::span<const double> pn, int k_max = kDefaultKmax) {
  validate(model);
  if (k_max < 1) throw Error(ErrorCode::BadConfig, "k_max must be at least 1");
  const int c = model.capacity;
  const double delta = model.delta();
  auto d = [&](int i) { return model.drop[static_cast<std::size_t>(i)]; };

  std::vector<std::vector<double>> accepted(static_cast<std::size_t>(k_max) + 2,
                                            std::vector<double>(static_cast<std::size_t>(c) + 1, 0.0));
  accepted[1][0] = 1.0 - d(0);
  for (int i = 1; i <= c; ++i) {
    double v = 0.0;
    for (int k = 1; k <= i; ++k) v += delta * (1.0 - d(k)) * std::pow(1.0 - delta, i - k);
    accepted[1][static_cast<std::size_t>(i)] = v + std::pow(1.0 - delta, i) * (1.0 - d(0));
  }
  for (int k = 2; k <= k_max + 1; ++k) {
    auto& cur = accepted[static_cast<std::size_t>(k)];
    const auto& prev = accepted[static_cast<std::size_t>(k - 1)];
    cur[0] = d(0) * prev[0];
    for (int i = 1; i <= c; ++i) {
      cur[static_cast<std::size_t>(i)] =
          delta * d(i) * prev[static_cast<std::size_t>(i)] + (1.0 - delta) * cur[static_cast<std::size_t>(i - 1)];
    }
  }

  double denom = 0.0;
  for (int n = 0; n < c; ++n) {
    double next_lost = std::pow(1.0 - delta, n + 1) * d(0);
    for (int i = 1; i <= n + 1; ++i) next_lost += delta * d(i) * std::pow(1.0 - delta, n + 1 - i);
    denom += pn[static_cast<std::size_t>(n)] * (1.0 - d(n)) * next_lost;
  }

  ClDistribution out;
  out.delta = delta;
  out.pmf.assign(static_cast<std::size_t>(k_max), 0.0);
  if (!(denom > 0.0)) return out;
  double total = 0.0;
  for (int k = 1; k <= k_max; ++k) {
    double num = 0.0;
    for (int n = 0; n < c; ++n) {
      num += pn[static_cast<std::size_t>(n)] * (1.0 - d(n)) * accepted[static_cast<std::size_t>(k + 1)][static_cast<std::size_t>(n + 1)];
    }
    out.pmf[static_cast<std::size_t>(k - 1)] = num / denom;
    total += num / denom;
  }
  out.deficit = std::max(0.0, 1.0 - total);
  return out;
}

inline constexpr double kClTailTolerance = 1e-9;

inline double cl_moments(const ClDistribution& dist, int m) {
  if (dist.deficit >= kClTailTolerance) {
    throw Error(ErrorCode::TailNotConverged, "run-length pmf truncated before its tail vanished");
  }
  double s = 0.0;
  for (std::size_t k = 0; k < dist.pmf.size(); ++k) s += std::pow(static_cast<double>(k + 1), m) * dist.pmf[k];
  return s;
}

}  // namespace renoq
