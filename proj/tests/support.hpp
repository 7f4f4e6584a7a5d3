#pragma once

#include <random>
#include <vector>

#include "renoq/model.hpp"

namespace support {

inline renoq::ModelParams make(double lambda, double d, std::vector<double> q,
                               renoq::Option option = renoq::Option::Option1) {
  renoq::ModelParams p;
  p.lambda = lambda;
  p.d = d;
  p.capacity = static_cast<int>(q.size()) - 1;
  p.q = std::move(q);
  p.option = option;
  return p;
}

inline std::vector<double> classic_q(int n) {
  std::vector<double> q(static_cast<std::size_t>(n) + 1, 0.0);
  q[0] = 1.0;
  return q;
}

/// Random point of the simplex; `support` limits the nonzero entries to the
/// first `support` indices when positive.
inline std::vector<double> random_q(int n, std::mt19937_64& g, int support = 0) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> q(static_cast<std::size_t>(n) + 1, 0.0);
  const int used = support > 0 ? std::min(support, n + 1) : n + 1;
  double s = 0.0;
  for (int i = 0; i < used; ++i) s += q[static_cast<std::size_t>(i)] = e(g);
  for (double& v : q) v /= s;
  return q;
}

inline double uniform(std::mt19937_64& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

}  // namespace support
