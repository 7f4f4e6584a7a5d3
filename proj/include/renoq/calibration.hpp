#pragma once

// Search for a renovation vector that reproduces a target loss probability
// and/or mean number in system. Two searches are offered: Nelder-Mead over
// softmax logits, and a global-best particle swarm projected onto the simplex.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "renoq/analysis.hpp"
#include "renoq/rng.hpp"

namespace renoq {

enum class SearchMethod { DirectSearch, PSO };

inline const char* to_string(SearchMethod m) { return m == SearchMethod::PSO ? "pso" : "direct"; }

struct CalibrationTarget {
  std::optional<double> target_loss;
  std::optional<double> target_mean_queue;
  double weight_loss = 1.0;
  double weight_queue = 1.0;
};

struct TraceEntry {
  std::vector<double> q;
  double objective = 0.0;
  double best = 0.0;  // best objective seen so far
};

struct CalibrationResult {
  std::vector<double> q;
  double objective = std::numeric_limits<double>::infinity();
  int evaluations = 0;
  bool budget_exhausted = false;
  std::vector<TraceEntry> trace;
};

inline constexpr double kConvergedObjective = 1e-14;

inline void validate(const CalibrationTarget& target) {
  if (!target.target_loss && !target.target_mean_queue) {
    throw Error(ErrorCode::BadConfig, "calibration needs at least one target");
  }
  if (target.target_loss && !(*target.target_loss >= 0.0 && *target.target_loss <= 1.0)) {
    throw Error(ErrorCode::BadConfig, "target loss must lie in [0,1]");
  }
  if (target.target_mean_queue && !(*target.target_mean_queue >= 0.0)) {
    throw Error(ErrorCode::BadConfig, "target mean queue must be nonnegative");
  }
  if (!(target.weight_loss >= 0.0 && target.weight_queue >= 0.0) ||
      target.weight_loss + target.weight_queue <= 0.0) {
    throw Error(ErrorCode::BadConfig, "weights must be nonnegative and not both zero");
  }
}

/// Weighted squared relative error of the analytic (pi, E N) at `params`.
inline double calibration_objective(const ModelParams& params, const CalibrationTarget& target) {
  Analysis a;
  try {
    a = analyze(params);
  } catch (const Error&) {
    return std::numeric_limits<double>::infinity();
  }
  auto rel = [](double value, double goal) {
    const double scale = goal > 0.0 ? goal : 1.0;
    const double e = (value - goal) / scale;
    return e * e;
  };
  double obj = 0.0;
  if (target.target_loss) obj += target.weight_loss * rel(a.loss.pi, *target.target_loss);
  if (target.target_mean_queue) obj += target.weight_queue * rel(a.mean_number(), *target.target_mean_queue);
  return obj;
}

/// Euclidean projection onto the probability simplex.
inline std::vector<double> project_to_simplex(std::span<const double> v) {
  std::vector<double> u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    cum += u[k];
    const double t = (cum - 1.0) / static_cast<double>(k + 1);
    if (u[k] - t > 0.0) theta = t;
  }
  std::vector<double> out(v.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) sum += out[i] = std::max(v[i] - theta, 0.0);
  for (double& x : out) x /= sum;
  return out;
}

/// q_0 has logit 0; q_i = exp(z_i) / (1 + sum exp(z_j)).
inline std::vector<double> softmax_simplex(std::span<const double> logits) {
  std::vector<double> q(logits.size() + 1);
  double peak = 0.0;
  for (double z : logits) peak = std::max(peak, z);
  q[0] = std::exp(-peak);
  double sum = q[0];
  for (std::size_t i = 0; i < logits.size(); ++i) sum += q[i + 1] = std::exp(logits[i] - peak);
  for (double& x : q) x /= sum;
  return q;
}

namespace detail {

class Evaluator {
 public:
  Evaluator(ModelParams base, const CalibrationTarget& target, int budget, CalibrationResult& out)
      : base_(std::move(base)), target_(target), budget_(budget), out_(out) {}

  bool exhausted() const { return out_.evaluations >= budget_; }
  bool converged() const { return out_.objective <= kConvergedObjective; }
  bool done() const { return exhausted() || converged(); }
  int evaluations() const { return out_.evaluations; }
  int budget() const { return budget_; }

  double operator()(const std::vector<double>& q) {
    if (exhausted()) return std::numeric_limits<double>::infinity();
    base_.q = q;
    const double obj = calibration_objective(base_, target_);
    ++out_.evaluations;
    if (obj < out_.objective) {
      out_.objective = obj;
      out_.q = q;
    }
    out_.trace.push_back({q, obj, out_.objective});
    return obj;
  }

 private:
  ModelParams base_;
  const CalibrationTarget& target_;
  int budget_;
  CalibrationResult& out_;
};

inline double normal(Xoshiro256& rng) {
  // Box-Muller; one variate per call keeps the stream layout simple.
  const double u1 = 1.0 - rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

/// Nelder-Mead over coordinates that `to_q` maps onto the simplex. The objective vanishes on a whole
/// manifold of renovation vectors and its two residuals respond almost
/// collinearly to q, so the simplex flattens into a narrow valley. Every
/// cycle it is rebuilt around the best vertex along its own principal axes,
/// with thin axes widened to kWidenRatio of the widest.
template <class ToSimplex>
void nelder_mead(Evaluator& eval, Eigen::VectorXd best, double step, ToSimplex&& to_q) {
  using Vec = Eigen::VectorXd;
  constexpr double kWidenRatio = 0.3;
  const auto dim = static_cast<int>(best.size());
  const int cycle = 40 * (dim + 1);
  auto f = [&](const Vec& z) {
    return eval(to_q(std::span<const double>(z.data(), static_cast<std::size_t>(z.size()))));
  };
  Eigen::MatrixXd axes = step * Eigen::MatrixXd::Identity(dim, dim);  // columns are simplex edges

  while (!eval.done()) {
    const int cycle_start = eval.evaluations();
    std::vector<Vec> pts{best};
    for (int i = 0; i < dim; ++i) pts.push_back(best + axes.col(i));
    std::vector<double> vals;
    for (const auto& p : pts) vals.push_back(f(p));

    while (!eval.done() && eval.evaluations() - cycle_start < cycle) {
      std::vector<std::size_t> order(pts.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return vals[a] < vals[b]; });
      std::vector<Vec> sp;
      std::vector<double> sv;
      for (auto i : order) {
        sp.push_back(pts[i]);
        sv.push_back(vals[i]);
      }
      pts = std::move(sp);
      vals = std::move(sv);

      Vec centroid = Vec::Zero(dim);
      for (std::size_t i = 0; i + 1 < pts.size(); ++i) centroid += pts[i];
      centroid /= dim;
      auto along = [&](double t) -> Vec { return centroid + t * (pts.back() - centroid); };

      const Vec reflected = along(-1.0);
      const double fr = f(reflected);
      if (fr < vals[0]) {
        const Vec expanded = along(-2.0);
        const double fe = f(expanded);
        pts.back() = fe < fr ? expanded : reflected;
        vals.back() = std::min(fe, fr);
      } else if (fr < vals[vals.size() - 2]) {
        pts.back() = reflected;
        vals.back() = fr;
      } else {
        const Vec contracted = fr < vals.back() ? along(-0.5) : along(0.5);
        const double fc = f(contracted);
        if (fc < std::min(fr, vals.back())) {
          pts.back() = contracted;
          vals.back() = fc;
        } else {
          for (std::size_t i = 1; i < pts.size(); ++i) {
            pts[i] = pts[0] + 0.5 * (pts[i] - pts[0]);
            vals[i] = f(pts[i]);
          }
        }
      }
    }

    const auto lowest = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
    best = pts[lowest];
    Eigen::MatrixXd edges(dim, dim);
    int c = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i != lowest) edges.col(c++) = pts[i] - best;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(edges, Eigen::ComputeFullU);
    const Vec sigma = svd.singularValues();
    const double widest = std::max(sigma[0], 1e-8);
    for (int i = 0; i < dim; ++i) axes.col(i) = svd.matrixU().col(i) * std::max(sigma[i], kWidenRatio * widest);
  }
}

/// Global-best swarm with constriction coefficients; positions are projected
/// back onto the simplex after every move. Stops once `stop_at` evaluations
/// have been spent.
inline std::vector<double> particle_swarm(Evaluator& eval, int dim, int stop_at, Xoshiro256& rng) {
  constexpr int kParticles = 10;
  constexpr double kInertia = 0.7298;
  constexpr double kPull = 1.49618;
  constexpr double kMaxSpeed = 0.25;
  const auto n = static_cast<std::size_t>(dim);

  std::vector<std::vector<double>> pos(kParticles, std::vector<double>(n));
  std::vector<std::vector<double>> vel(kParticles, std::vector<double>(n, 0.0));
  for (auto& p : pos) {
    std::vector<double> e(n);
    for (double& x : e) x = rng.exponential(1.0);
    p = project_to_simplex(e);
  }
  std::vector<std::vector<double>> best_pos = pos;
  std::vector<double> best_val(kParticles, std::numeric_limits<double>::infinity());
  std::vector<double> global = pos[0];
  double global_val = std::numeric_limits<double>::infinity();
  auto finished = [&] { return eval.done() || eval.evaluations() >= stop_at; };

  for (std::size_t s = 0; s < pos.size() && !finished(); ++s) {
    best_val[s] = eval(pos[s]);
    if (best_val[s] < global_val) {
      global_val = best_val[s];
      global = pos[s];
    }
  }
  while (!finished()) {
    for (std::size_t s = 0; s < pos.size() && !finished(); ++s) {
      auto& x = pos[s];
      auto& v = vel[s];
      for (std::size_t k = 0; k < n; ++k) {
        v[k] = kInertia * v[k] + kPull * rng.uniform() * (best_pos[s][k] - x[k]) +
               kPull * rng.uniform() * (global[k] - x[k]);
        v[k] = std::clamp(v[k], -kMaxSpeed, kMaxSpeed);
        x[k] += v[k];
      }
      x = project_to_simplex(x);
      const double val = eval(x);
      if (val < best_val[s]) {
        best_val[s] = val;
        best_pos[s] = x;
      }
      if (val < global_val) {
        global_val = val;
        global = x;
      }
    }
  }
  return global;
}

}  // namespace detail

/// Minimizes the calibration objective over renovation vectors; `base.q` is
/// ignored and the Option is held fixed. Deterministic for a given seed.
inline CalibrationResult calibrate(const ModelParams& base, const CalibrationTarget& target, int budget,
                                   SearchMethod method, std::uint64_t seed) {
  validate(target);
  if (budget < 10) throw Error(ErrorCode::BadConfig, "calibration budget must be at least 10");
  ModelParams params = base;
  params.q.assign(static_cast<std::size_t>(base.capacity) + 1, 0.0);
  params.q[0] = 1.0;
  validate(params);

  CalibrationResult out;
  detail::Evaluator eval(params, target, budget, out);
  Xoshiro256 rng(seed);
  eval(params.q);  // no renovation at all is a legitimate answer
  if (method == SearchMethod::DirectSearch) {
    Eigen::VectorXd start(params.capacity);
    for (Eigen::Index k = 0; k < start.size(); ++k) start[k] = 0.3 * detail::normal(rng);
    detail::nelder_mead(eval, start, 1.0, [](std::span<const double> z) { return softmax_simplex(z); });
  } else {
    // The swarm locates the valley; a short simplex search then walks along it.
    const int swarm_budget = budget * 3 / 5;
    const auto best = detail::particle_swarm(eval, params.capacity + 1, swarm_budget, rng);
    detail::nelder_mead(eval, Eigen::Map<const Eigen::VectorXd>(best.data(), static_cast<Eigen::Index>(best.size())),
                        0.05, [](std::span<const double> x) { return project_to_simplex(x); });
  }
  out.budget_exhausted = !eval.converged();
  return out;
}

}  // namespace renoq
