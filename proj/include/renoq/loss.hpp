#pragma once

// Probability that an arriving (tagged) customer is eventually lost, either
// blocked on arrival or removed later by a renovation.

#include <algorithm>
#include <cmath>
#include <vector>

#include "renoq/model.hpp"
#include "renoq/stationary.hpp"

namespace renoq {

struct LossBreakdown {
  double pi = 0.0;
  double blocked = 0.0;    // P_{N+1}
  double renovated = 0.0;  // pi - blocked
};

// ---------------------------------------------------------------------------
// Option 1
// ---------------------------------------------------------------------------

/// r_i (nobody behind) and r*_i (at least one behind): loss probability of a
/// waiting customer with i customers in front of it when a service begins.
struct RenovationRisk1 {
  std::vector<double> r;
  std::vector<double> rstar;
};

inline RenovationRisk1 risks_option1(const ModelParams& params, const PoissonKernel& kernel) {
  const int n = params.capacity;
  RenovationRisk1 risk;
  if (n < 2) return risk;
  const std::span<const double> q = params.q;
  const RenovationTail tail(q);
  const double idle = kernel.beta(0);  // no arrival during a full service
  const double busy = kernel.tail(0);
  risk.r.assign(static_cast<std::size_t>(n - 1), 0.0);
  risk.rstar.assign(static_cast<std::size_t>(n - 1), 0.0);
  risk.r[0] = busy * tail(1);
  risk.rstar[0] = tail(1);
  for (int i = 1; i <= n - 2; ++i) {
    double via_r = 0.0;
    double via_rstar = 0.0;
    for (int j = 0; j <= i - 1; ++j) {
      via_r += q[static_cast<std::size_t>(j)] * risk.r[static_cast<std::size_t>(i - 1 - j)];
      via_rstar += q[static_cast<std::size_t>(j)] * risk.rstar[static_cast<std::size_t>(i - 1 - j)];
    }
    risk.rstar[static_cast<std::size_t>(i)] = via_rstar + tail(i + 1);
    risk.r[static_cast<std::size_t>(i)] = idle * via_r + busy * (via_rstar + tail(i + 1));
  }
  return risk;
}

/// Integral over [0,d] of p_i(x) e^{-lambda (d-x)}: the tagged customer sees i
/// in system and nobody arrives before the current service ends.
inline double quiet_mass(int i, const StationaryProfile& prof, const ModelParams& params) {
  return integrate(
      [&](double x) {
        return density_at(i, x, prof.p0, params) * std::exp(-params.lambda * (params.d - x));
      },
      0.0, params.d);
}

/// Integral over [0,d] of p_i(x) (1 - e^{-lambda (d-x)}).
inline double busy_mass(int i, const StationaryProfile& prof, const ModelParams& params) {
  return integrate(
      [&](double x) {
        return density_at(i, x, prof.p0, params) * -std::expm1(-params.lambda * (params.d - x));
      },
      0.0, params.d);
}

inline LossBreakdown loss_option1(const StationaryProfile& prof, const RenovationRisk1& risk,
                                  const ModelParams& params) {
  const int n = params.capacity;
  const std::span<const double> q = params.q;
  const RenovationTail tail(q);
  auto r = [&](int k) { return risk.r[static_cast<std::size_t>(k)]; };
  auto rstar = [&](int k) { return risk.rstar[static_cast<std::size_t>(k)]; };

  LossBreakdown out;
  out.blocked = prof.pn[static_cast<std::size_t>(n + 1)];
  double renovated = 0.0;
  if (n >= 2) {
    // Sees one customer: it heads the queue; lost only if somebody joins
    // behind it and a renovation happens.
    renovated += tail(1) * busy_mass(1, prof, params);
    for (int i = 2; i <= n - 1; ++i) {
      double via_r = 0.0;
      double via_rstar = 0.0;
      for (int j = 0; j <= i - 2; ++j) {
        via_r += q[static_cast<std::size_t>(j)] * r(i - 2 - j);
        via_rstar += q[static_cast<std::size_t>(j)] * rstar(i - 2 - j);
      }
      renovated += quiet_mass(i, prof, params) * via_r;
      renovated += busy_mass(i, prof, params) * (via_rstar + tail(i));
    }
    // Takes the last place: nobody can join behind before the next completion.
    double last = 0.0;
    for (int j = 0; j <= n - 2; ++j) last += q[static_cast<std::size_t>(j)] * r(n - 2 - j);
    renovated += prof.pn[static_cast<std::size_t>(n)] * last;
  }
  out.renovated = renovated;
  out.pi = out.blocked + out.renovated;
  return out;
}

// ---------------------------------------------------------------------------
// Option 2
// ---------------------------------------------------------------------------

/// gamma_{ij}: the arrival sees i in system and exactly j more customers
/// arrive before the current service completes. Columns run j = 0..N-i; the
/// remaining mass (j > N-i) is kept in `overflow`.
struct RenovationRisk2 {
  std::vector<std::vector<double>> gamma;  // gamma[i-1][j]
  std::vector<double> overflow;            // overflow[i-1] = sum_{j > N-i} gamma_{ij}
  // risk[front][behind], behind = 0..N-front-1: loss probability of a waiting
  // customer with `front` customers ahead of it and `behind` after it when a
  // service begins.
  std::vector<std::vector<double>> risk;

  double g(int i, int j) const { return gamma[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j)]; }
  double tail(int i) const { return overflow[static_cast<std::size_t>(i - 1)]; }

  /// r_{behind,front}; a customer with front = -1 is entering service and is safe.
  double r(int behind, int front) const {
    if (front < 0) return 0.0;
    return risk[static_cast<std::size_t>(front)][static_cast<std::size_t>(behind)];
  }
};

/// Closed form of gamma_{ij} after substituting the density expansion:
/// (1/lambda) sum_{k<i} p_{i-k}(0) beta_{k+j+1}.
inline double gamma_coefficient(int i, int j, const StationaryProfile& prof, const ModelParams& params,
                                const PoissonKernel& kernel) {
  double s = 0.0;
  for (int k = 0; k < i; ++k) s += prof.boundary(i - k) * kernel.beta(k + j + 1);
  return s / params.lambda;
}

/// sum_{j >= from} gamma_{ij}, evaluated through the Poisson tail.
inline double gamma_tail(int i, int from, const StationaryProfile& prof, const ModelParams& params,
                         const PoissonKernel& kernel) {
  double s = 0.0;
  for (int k = 0; k < i; ++k) s += prof.boundary(i - k) * kernel.tail(k + from);
  return s / params.lambda;
}

inline std::vector<std::vector<double>> gamma_coefficients(const StationaryProfile& prof,
                                                           const ModelParams& params,
                                                           const PoissonKernel& kernel) {
  const int n = params.capacity;
  std::vector<std::vector<double>> g(static_cast<std::size_t>(n));
  for (int i = 1; i <= n; ++i) {
    for (int j = 0; j <= n - i; ++j) g[static_cast<std::size_t>(i - 1)].push_back(gamma_coefficient(i, j, prof, params, kernel));
  }
  return g;
}

inline std::vector<std::vector<double>> risks_option2(const ModelParams& params, const PoissonKernel& kernel) {
  const int n = params.capacity;
  const std::span<const double> q = params.q;
  const RenovationTail tail(q);
  std::vector<std::vector<double>> risk(static_cast<std::size_t>(n));
  for (int front = 0; front < n; ++front) risk[static_cast<std::size_t>(front)].assign(static_cast<std::size_t>(n - front), 0.0);
  auto at = [&](int behind, int front) {
    return front < 0 ? 0.0 : risk[static_cast<std::size_t>(front)][static_cast<std::size_t>(behind)];
  };

  for (int behind = 0; behind <= n - 1; ++behind) {
    double v = 0.0;
    for (int m = 0; m <= n - behind - 1; ++m) v += kernel.beta(m) * q_range(q, 1, m + behind);
    v += kernel.tail(n - behind - 1) * q_range(q, 1, n - 1);
    risk[0][static_cast<std::size_t>(behind)] = v;
  }
  for (int front = 1; front <= n - 1; ++front) {
    // Bracket for a completion that finds `grown` customers behind the tagged one.
    auto bracket = [&](int grown) {
      double s = 0.0;
      for (int k = 0; k <= front - 1; ++k) s += q_at(q, k) * at(grown, front - 1 - k);
      s += q_range(q, front + 1, front + grown);
      s += tail(front + grown + 1) * at(grown, front - 1);
      return s;
    };
    const int cap = n - 1 - front;  // most customers that fit behind
    for (int behind = 0; behind <= cap; ++behind) {
      double v = 0.0;
      for (int grown = behind; grown <= cap; ++grown) v += kernel.beta(grown - behind) * bracket(grown);
      v += kernel.tail(cap - behind) * bracket(cap);
      risk[static_cast<std::size_t>(front)][static_cast<std::size_t>(behind)] = v;
    }
  }
  return risk;
}

inline RenovationRisk2 risk_option2(const StationaryProfile& prof, const ModelParams& params,
                                    const PoissonKernel& kernel) {
  RenovationRisk2 out;
  out.gamma = gamma_coefficients(prof, params, kernel);
  for (int i = 1; i <= params.capacity; ++i) {
    out.overflow.push_back(gamma_tail(i, params.capacity - i + 1, prof, params, kernel));
  }
  out.risk = risks_option2(params, kernel);
  return out;
}

inline LossBreakdown loss_option2(const StationaryProfile& prof, const RenovationRisk2& rk,
                                  const ModelParams& params) {
  const int n = params.capacity;
  const std::span<const double> q = params.q;
  const RenovationTail tail(q);
  // Tagged customer sees i in system (i-1 waiting ahead) and `behind` joined
  // after it by the next completion.
  auto bracket = [&](int i, int behind) {
    double s = 0.0;
    for (int k = 0; k <= i - 2; ++k) s += q_at(q, k) * rk.r(behind, i - 2 - k);
    s += q_range(q, i, i + behind - 1);
    s += tail(i + behind) * rk.r(behind, i - 2);
    return s;
  };
  LossBreakdown out;
  out.blocked = prof.pn[static_cast<std::size_t>(n + 1)];
  double renovated = 0.0;
  for (int i = 1; i <= n; ++i) {
    for (int j = 0; j <= n - i; ++j) renovated += rk.g(i, j) * bracket(i, j);
    renovated += rk.tail(i) * bracket(i, n - i);
  }
  out.renovated = renovated;
  out.pi = out.blocked + out.renovated;
  return out;
}

}  // namespace renoq
