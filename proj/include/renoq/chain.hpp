#pragma once

// Service-completion embedded Markov chain. State n (0..N) is the number of
// customers left in the system after a departure and the renovation that
// follows it.

#include <algorithm>
#include <vector>

#include <Eigen/Dense>

#include "renoq/model.hpp"

namespace renoq {

using Matrix = Eigen::MatrixXd;

/// Transition matrix under Option 1: rows 0 and 1 coincide (both start a
/// service with exactly one customer); row i >= 2 starts with i customers.
inline Matrix build_matrix_option1(const ModelParams& params, const PoissonKernel& kernel) {
  const int n = params.capacity;
  const std::span<const double> q = params.q;
  const RenovationTail tail(q);
  auto beta = [&](int k) { return kernel.beta(k); };
  auto big_b = [&](int k) { return kernel.tail(k); };

  Matrix p = Matrix::Zero(n + 1, n + 1);
  for (int i = 0; i <= n; ++i) {
    if (i <= 1) {
      p(i, 0) = beta(0);
      double s = 0.0;
      for (int k = 1; k <= n; ++k) s += beta(k) * q_at(q, k - 1);
      s += big_b(n) * q_at(q, n - 1);
      for (int k = 1; k <= n; ++k) s += beta(k) * tail(k);
      s += big_b(n) * q_at(q, n);
      p(i, 1) = s;
      for (int j = 2; j <= n; ++j) {
        double v = 0.0;
        for (int k = j; k <= n; ++k) v += beta(k) * q_at(q, k - j);
        p(i, j) = v + big_b(n) * q_at(q, n - j);
      }
      continue;
    }
    const int top = n + 1 - i;
    double s = 0.0;
    for (int k = 0; k <= top; ++k) s += beta(k) * tail(k + i - 1);
    s += big_b(top) * q_at(q, n);
    for (int k = std::max(0, 2 - i); k <= top; ++k) s += beta(k) * q_at(q, k + i - 2);
    s += big_b(top) * q_at(q, n - 1);
    p(i, 1) = s;
    for (int j = 2; j <= n; ++j) {
      double v = 0.0;
      for (int k = std::max(0, j - i + 1); k <= top; ++k) v += beta(k) * q_at(q, k - j + i - 1);
      p(i, j) = v + big_b(top) * q_at(q, n - j);
    }
  }
  return p;
}

/// Transition matrix under Option 2. A service that starts with i >= 1
/// customers leaves m = min(i - 1 + k, N) waiting after k arrivals; the
/// renovation then keeps m with probability q_0 + Q_m or removes r < m with
/// probability q_r.
inline Matrix build_matrix_option2(const ModelParams& params, const PoissonKernel& kernel) {
  const int n = params.capacity;
  const std::span<const double> q = params.q;
  const RenovationTail tail(q);
  auto beta = [&](int k) { return kernel.beta(k); };
  auto big_b = [&](int k) { return kernel.tail(k); };

  Matrix p = Matrix::Zero(n + 1, n + 1);
  for (int i = 0; i <= n; ++i) {
    const int start = std::max(i, 1);  // customers present when the service begins
    const int top = n - start;         // last arrival count that does not fill the queue
    p(i, 0) = i <= 1 ? beta(0) : 0.0;
    for (int j = 1; j < n; ++j) {
      double v = 0.0;
      for (int k = std::max(0, j - start + 1); k <= top; ++k) {
        v += beta(k) * q_at(q, k + start - 1 - j);
      }
      v += big_b(top) * q_at(q, n - j);
      if (j >= start - 1) v += beta(j - start + 1) * tail(j);
      p(i, j) = v;
    }
    p(i, n) = (q_at(q, 0) + q_at(q, n)) * big_b(top);
  }
  return p;
}

inline Matrix build_matrix(const ModelParams& params, const PoissonKernel& kernel) {
  return params.option == Option::Option1 ? build_matrix_option1(params, kernel)
                                          : build_matrix_option2(params, kernel);
}

/// Stationary vector of an irreducible stochastic matrix by GTH state
/// reduction. No subtractions are performed, so small probabilities keep full
/// relative accuracy.
inline std::vector<double> stationary(Matrix a) {
  const Eigen::Index n = a.rows();
  if (n == 0 || a.cols() != n) throw Error(ErrorCode::SingularChain, "matrix must be square");
  for (Eigen::Index k = n - 1; k > 0; --k) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) s += a(k, j);
    if (!(s > 0.0)) throw Error(ErrorCode::SingularChain, "zero pivot in state reduction");
    for (Eigen::Index i = 0; i < k; ++i) a(i, k) /= s;
    for (Eigen::Index i = 0; i < k; ++i) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (Eigen::Index j = 0; j < k; ++j) a(i, j) += aik * a(k, j);
    }
  }
  std::vector<double> x(static_cast<std::size_t>(n), 0.0);
  x[0] = 1.0;
  double total = 1.0;
  for (Eigen::Index k = 1; k < n; ++k) {
    double v = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) v += x[static_cast<std::size_t>(i)] * a(i, k);
    x[static_cast<std::size_t>(k)] = v;
    total += v;
  }
  for (double& v : x) v /= total;
  return x;
}

struct EmbeddedChain {
  Matrix transition;
  std::vector<double> pplus;
};

inline EmbeddedChain solve_chain(const ModelParams& params, const PoissonKernel& kernel) {
  EmbeddedChain chain;
  chain.transition = build_matrix(params, kernel);
  chain.pplus = stationary(chain.transition);
  return chain;
}

}  // namespace renoq
