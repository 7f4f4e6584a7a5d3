#pragma once

// Model parameters, validation and the Poisson / renovation kernels shared by
// every analytic routine.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

namespace renoq {

enum class ErrorCode {
  NegativeRate,
  BadProbabilityVector,
  CapacityTooSmall,
  SingularChain,
  DegenerateService,
  ConsistencyError,
  BadThresholds,
  TailNotConverged,
  InsufficientReplications,
  BadConfig,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NegativeRate: return "NegativeRate";
    case ErrorCode::BadProbabilityVector: return "BadProbabilityVector";
    case ErrorCode::CapacityTooSmall: return "CapacityTooSmall";
    case ErrorCode::SingularChain: return "SingularChain";
    case ErrorCode::DegenerateService: return "DegenerateService";
    case ErrorCode::ConsistencyError: return "ConsistencyError";
    case ErrorCode::BadThresholds: return "BadThresholds";
    case ErrorCode::TailNotConverged: return "TailNotConverged";
    case ErrorCode::InsufficientReplications: return "InsufficientReplications";
    case ErrorCode::BadConfig: return "BadConfig";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Conflict-resolution rule applied when a renovation asks to remove at least
/// as many customers as are waiting.
enum class Option {
  Option1,  ///< remove all waiting customers but one
  Option2,  ///< cancel the removal
};

inline const char* to_string(Option option) {
  return option == Option::Option1 ? "option1" : "option2";
}

/// M/D/1/N queue with renovation. `capacity` counts waiting places only, so the
/// system holds at most capacity + 1 customers. `q[i]` is the probability that
/// i waiting customers are removed at a service completion.
struct ModelParams {
  double lambda = 1.0;
  double d = 1.0;
  int capacity = 1;
  std::vector<double> q{1.0, 0.0};
  Option option = Option::Option1;

  double rho() const { return lambda * d; }
};

inline constexpr double kSimplexTolerance = 1e-12;

/// Returns the params unchanged when every invariant holds; throws Error otherwise.
inline const ModelParams& validate(const ModelParams& params) {
  if (!(params.lambda > 0.0) || !std::isfinite(params.lambda)) {
    throw Error(ErrorCode::NegativeRate, "arrival rate must be positive");
  }
  if (!(params.d > 0.0) || !std::isfinite(params.d)) {
    throw Error(ErrorCode::NegativeRate, "service time must be positive");
  }
  if (params.capacity < 1) {
    throw Error(ErrorCode::CapacityTooSmall, "queue capacity must be at least 1");
  }
  if (params.q.size() != static_cast<std::size_t>(params.capacity) + 1) {
    throw Error(ErrorCode::BadProbabilityVector,
                "renovation vector must have capacity + 1 entries");
  }
  double sum = 0.0;
  for (double v : params.q) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorCode::BadProbabilityVector, "renovation entry outside [0,1]");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance) {
    throw Error(ErrorCode::BadProbabilityVector, "renovation vector does not sum to 1");
  }
  return params;
}

// ---------------------------------------------------------------------------
// Poisson kernel
// ---------------------------------------------------------------------------

inline constexpr double kLargeRho = 50.0;
inline constexpr double kTailCutoff = 1e-14;

/// beta_i = rho^i e^{-rho} / i!, by the multiplicative recurrence (log space
/// above kLargeRho where e^{-rho} loses range).
inline double poisson_pmf(double rho, int i) {
  if (i < 0) return 0.0;
  if (rho == 0.0) return i == 0 ? 1.0 : 0.0;
  if (rho > kLargeRho) {
    return std::exp(i * std::log(rho) - rho - std::lgamma(i + 1.0));
  }
  double b = std::exp(-rho);
  for (int k = 1; k <= i; ++k) b *= rho / k;
  return b;
}

/// B_i = P{Poisson(rho) > i}, clamped to [0,1].
inline double poisson_tail(double rho, int i) {
  if (i < 0) return 1.0;
  if (rho == 0.0) return 0.0;
  if (rho > kLargeRho) {
    return std::clamp(boost::math::gamma_p(i + 1.0, rho), 0.0, 1.0);
  }
  double b = std::exp(-rho);
  double tail = 1.0 - b;
  for (int k = 1; k <= i; ++k) {
    b *= rho / k;
    tail = std::max(0.0, tail - b);
  }
  return std::clamp(tail, 0.0, 1.0);
}

/// Tabulated beta_0..beta_M and B_0..B_M. M is at least `min_terms` and large
/// enough that B_M < kTailCutoff. Out-of-table lookups return beta = 0 and the
/// (negligible) B_M.
class PoissonKernel {
 public:
  PoissonKernel() = default;

  PoissonKernel(double rho, int min_terms) : rho_(rho) {
    if (!(rho >= 0.0)) throw Error(ErrorCode::NegativeRate, "rho must be nonnegative");
    if (rho > kLargeRho) {
      for (int i = 0;; ++i) {
        beta_.push_back(poisson_pmf(rho, i));
        btail_.push_back(poisson_tail(rho, i));
        if (i >= min_terms && (btail_.back() < kTailCutoff || i > rho + 1000)) break;
      }
      return;
    }
    double b = rho == 0.0 ? 1.0 : std::exp(-rho);
    double tail = 1.0 - b;
    beta_.push_back(b);
    btail_.push_back(std::clamp(tail, 0.0, 1.0));
    for (int i = 1; i < min_terms + 1 || btail_.back() >= kTailCutoff; ++i) {
      b *= rho / i;
      tail = std::max(0.0, tail - b);
      beta_.push_back(b);
      btail_.push_back(std::clamp(tail, 0.0, 1.0));
    }
  }

  double rho() const { return rho_; }
  int size() const { return static_cast<int>(beta_.size()); }

  double beta(int i) const {
    if (i < 0 || i >= size()) return 0.0;
    return beta_[static_cast<std::size_t>(i)];
  }

  /// B_i; B_{-1} = 1 so that beta_i = B_{i-1} - B_i holds at i = 0.
  double tail(int i) const {
    if (i < 0) return 1.0;
    if (i >= size()) return btail_.back();
    return btail_[static_cast<std::size_t>(i)];
  }

  std::span<const double> betas() const { return beta_; }
  std::span<const double> tails() const { return btail_; }

 private:
  double rho_ = 0.0;
  std::vector<double> beta_;
  std::vector<double> btail_;
};

inline PoissonKernel make_kernel(const ModelParams& params) {
  return PoissonKernel(params.rho(), 2 * params.capacity + 4);
}

// ---------------------------------------------------------------------------
// Renovation tail
// ---------------------------------------------------------------------------

/// Q_i = q_i + ... + q_N for 0 <= i <= N, with the sentinel Q_{N+1} = 0.
class RenovationTail {
 public:
  RenovationTail() = default;

  explicit RenovationTail(std::span<const double> q) : tail_(q.size() + 1, 0.0) {
    for (std::size_t i = q.size(); i-- > 0;) tail_[i] = tail_[i + 1] + q[i];
  }

  /// Indices past N return 0; negative indices return Q_0.
  double operator()(int i) const {
    if (i < 0) return tail_.front();
    if (static_cast<std::size_t>(i) >= tail_.size()) return 0.0;
    return tail_[static_cast<std::size_t>(i)];
  }

  int capacity() const { return static_cast<int>(tail_.size()) - 2; }

 private:
  std::vector<double> tail_;
};

inline RenovationTail renovation_tail(std::span<const double> q) { return RenovationTail(q); }

/// q_i with q_i = 0 outside 0..N.
inline double q_at(std::span<const double> q, int i) {
  if (i < 0 || static_cast<std::size_t>(i) >= q.size()) return 0.0;
  return q[static_cast<std::size_t>(i)];
}

/// q_lo + ... + q_hi (empty when hi < lo).
inline double q_range(std::span<const double> q, int lo, int hi) {
  double s = 0.0;
  for (int k = std::max(lo, 0); k <= hi; ++k) s += q_at(q, k);
  return s;
}

}  // namespace renoq
