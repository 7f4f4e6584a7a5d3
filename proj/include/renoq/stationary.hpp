#pragma once

// Time-stationary distribution of the number in system, reconstructed from the
// embedded chain through mean sojourn times, and the elapsed-service-time
// densities p_n(x).

#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "renoq/chain.hpp"
#include "renoq/model.hpp"

namespace renoq {

/// Fixed 64-node Gauss-Legendre rule used for every density integral.
template <class F>
double integrate(F&& f, double a, double b) {
  return boost::math::quadrature::gauss<double, 64>::integrate(std::forward<F>(f), a, b);
}

struct StationaryProfile {
  std::vector<double> pn;     // P_0..P_{N+1}
  double fstar = 0.0;         // mean time between embedded epochs
  double f00 = 0.0;           // mean idle time, 1/lambda
  std::vector<double> f0;     // f_{01}..f_{0,N+1}
  std::vector<double> p0;     // p_1(0)..p_N(0)
  std::vector<double> pplus;  // embedded stationary vector

  int capacity() const { return static_cast<int>(p0.size()); }
  double boundary(int n) const { return p0[static_cast<std::size_t>(n - 1)]; }
};

inline double mean_cycle_time(double pplus0, const ModelParams& params) {
  return pplus0 * (1.0 / params.lambda + params.d) + (1.0 - pplus0) * params.d;
}

/// f_{01}..f_{0,N+1}: mean time spent at each level during a service that
/// starts with one customer. The last entry closes the service time d.
inline std::vector<double> sojourn_times(const ModelParams& params, const PoissonKernel& kernel) {
  const int n = params.capacity;
  std::vector<double> f(static_cast<std::size_t>(n) + 1);
  double used = 0.0;
  for (int level = 1; level <= n; ++level) {
    f[static_cast<std::size_t>(level - 1)] = kernel.tail(level - 1) / params.lambda;
    used += f[static_cast<std::size_t>(level - 1)];
  }
  f[static_cast<std::size_t>(n)] = std::max(0.0, params.d - used);
  return f;
}

/// f_{in}: mean time at level n during the embedded interval that starts in
/// state i. Levels below N+1 shift with i; the full level closes the service
/// time, since a service starting with more customers fills the queue sooner.
inline double sojourn(int i, int level, const ModelParams& params, const PoissonKernel& kernel) {
  const int n = params.capacity;
  if (i == 0) {
    if (level == 0) return 1.0 / params.lambda;
    return sojourn(1, level, params, kernel);
  }
  if (level < i || level > n + 1) return 0.0;
  if (level <= n) return kernel.tail(level - i) / params.lambda;
  double used = 0.0;
  for (int m = i; m <= n; ++m) used += kernel.tail(m - i) / params.lambda;
  return std::max(0.0, params.d - used);
}

/// P_n = sum_i P+_i f_{in} / f*.
inline std::vector<double> time_stationary(std::span<const double> pplus, const ModelParams& params,
                                           const PoissonKernel& kernel) {
  const int n = params.capacity;
  const double fstar = mean_cycle_time(pplus[0], params);
  std::vector<double> pn(static_cast<std::size_t>(n) + 2, 0.0);
  for (int level = 0; level <= n + 1; ++level) {
    double s = 0.0;
    for (int i = 0; i <= n; ++i) s += pplus[static_cast<std::size_t>(i)] * sojourn(i, level, params, kernel);
    pn[static_cast<std::size_t>(level)] = s / fstar;
  }
  return pn;
}

inline double queue_moments(std::span<const double> pn, int m) {
  double s = 0.0;
  for (std::size_t k = 0; k < pn.size(); ++k) s += std::pow(static_cast<double>(k), m) * pn[k];
  return s;
}

/// p_1(0)..p_N(0) from P_n = (1/lambda) sum_{k<n} B_k p_{n-k}(0), solved
/// forward in n.
inline std::vector<double> boundary_densities(std::span<const double> pn, const ModelParams& params,
                                              const PoissonKernel& kernel) {
  const int n = params.capacity;
  const double b0 = kernel.tail(0);
  if (!(b0 > 0.0)) throw Error(ErrorCode::DegenerateService, "B_0 vanishes");
  const double floor = -1e-12 * std::max(1.0, params.lambda / b0);
  std::vector<double> p0(static_cast<std::size_t>(n), 0.0);
  for (int level = 1; level <= n; ++level) {
    double v = params.lambda * pn[static_cast<std::size_t>(level)];
    for (int k = 1; k < level; ++k) v -= kernel.tail(k) * p0[static_cast<std::size_t>(level - k - 1)];
    v /= b0;
    if (v < 0.0) {
      if (v < floor) throw Error(ErrorCode::ConsistencyError, "negative boundary density");
      v = 0.0;
    }
    p0[static_cast<std::size_t>(level - 1)] = v;
  }
  return p0;
}

/// p_n(x) = e^{-lambda x} sum_{k<n} p_{n-k}(0) (lambda x)^k / k! for x < d, else 0.
inline double density_at(int n, double x, std::span<const double> p0, const ModelParams& params) {
  if (n < 1 || x < 0.0 || x >= params.d) return 0.0;
  const double lx = params.lambda * x;
  double term = 1.0;
  double s = 0.0;
  for (int k = 0; k < n; ++k) {
    if (k > 0) term *= lx / k;
    s += p0[static_cast<std::size_t>(n - k - 1)] * term;
  }
  return std::exp(-lx) * s;
}

/// P_n(x) = integral of p_n over [0, x].
inline double cumulative_at(int n, double x, std::span<const double> p0, const ModelParams& params) {
  const double upper = std::min(x, params.d);
  if (upper <= 0.0) return 0.0;
  return integrate([&](double t) { return density_at(n, t, p0, params); }, 0.0, upper);
}

inline StationaryProfile stationary_profile(const EmbeddedChain& chain, const ModelParams& params,
                                            const PoissonKernel& kernel) {
  StationaryProfile prof;
  prof.pplus = chain.pplus;
  prof.fstar = mean_cycle_time(chain.pplus[0], params);
  prof.f00 = 1.0 / params.lambda;
  prof.f0 = sojourn_times(params, kernel);
  prof.pn = time_stationary(chain.pplus, params, kernel);
  prof.p0 = boundary_densities(prof.pn, params, kernel);
  return prof;
}

}  // namespace renoq
