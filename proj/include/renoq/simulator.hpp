#pragma once

// Discrete-event simulation of the renovation queue and of the RED queue.
// Every estimate is a mean over independent replications with a Student-t 99%
// confidence half-width.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "renoq/consecutive_loss.hpp"
#include "renoq/model.hpp"
#include "renoq/rng.hpp"

namespace renoq {

struct SimConfig {
  std::int64_t arrivals = 100000;  // per replication, warmup included
  int replications = 10;
  std::uint64_t seed = 1;
  double warmup_fraction = 0.1;
  int k_max = 50;                  // run-length histogram size
  int threads = 0;                 // 0 = hardware concurrency
};

inline const SimConfig& validate(const SimConfig& config) {
  if (config.arrivals < 1000) throw Error(ErrorCode::BadConfig, "need at least 1000 arrivals per replication");
  if (config.replications < 1) throw Error(ErrorCode::BadConfig, "need at least one replication");
  if (!(config.warmup_fraction >= 0.0 && config.warmup_fraction < 1.0)) {
    throw Error(ErrorCode::BadConfig, "warmup fraction must lie in [0,1)");
  }
  if (config.k_max < 1) throw Error(ErrorCode::BadConfig, "k_max must be at least 1");
  return config;
}

struct SimEstimate {
  std::string metric;
  double mean = 0.0;
  double half_width_99 = 0.0;
  std::vector<double> replication_values;

  bool contains(double value) const { return std::abs(value - mean) <= half_width_99; }
};

/// Mean and Student-t 99% half-width of per-replication means. A single
/// replication yields an infinite half-width.
inline SimEstimate merge_replications(std::vector<double> values, std::string metric = {}) {
  if (values.empty()) throw Error(ErrorCode::InsufficientReplications, "no replication values");
  SimEstimate est;
  est.metric = std::move(metric);
  const double r = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  est.mean = sum / r;
  if (values.size() < 2) {
    est.half_width_99 = std::numeric_limits<double>::infinity();
  } else {
    double ss = 0.0;
    for (double v : values) ss += (v - est.mean) * (v - est.mean);
    const double sd = std::sqrt(ss / (r - 1.0));
    const boost::math::students_t dist(r - 1.0);
    est.half_width_99 = boost::math::quantile(dist, 0.995) * sd / std::sqrt(r);
  }
  est.replication_values = std::move(values);
  return est;
}

/// Raw tallies of one replication, restricted to post-warmup arrivals.
struct ReplicationStats {
  std::int64_t arrivals = 0;
  std::int64_t served = 0;
  std::int64_t blocked = 0;
  std::int64_t renovated = 0;
  std::int64_t in_system_at_end = 0;
  std::vector<double> occupancy;   // time fraction at each level
  double mean_queue = 0.0;
  std::vector<std::int64_t> runs;  // runs[k-1] = loss runs of length k (k <= k_max)
  std::int64_t total_runs = 0;     // including runs longer than k_max
};

struct SimReport {
  SimEstimate loss_prob;
  SimEstimate blocked_prob;
  SimEstimate renovated_prob;
  std::vector<SimEstimate> occupancy;
  SimEstimate mean_queue;
  std::vector<SimEstimate> cl_histogram;
  std::vector<ReplicationStats> replications;
};

namespace detail {

/// Tracks loss runs between accepted customers in the order fates are realized.
class RunCounter {
 public:
  explicit RunCounter(int k_max) : runs_(static_cast<std::size_t>(k_max), 0) {}

  void loss() { ++current_; }

  void accept() {
    if (current_ > 0) {
      ++total_;
      if (current_ <= static_cast<std::int64_t>(runs_.size())) ++runs_[static_cast<std::size_t>(current_ - 1)];
    }
    current_ = 0;
  }

  void finish(ReplicationStats& st) {
    st.runs = std::move(runs_);
    st.total_runs = total_;
  }

 private:
  std::vector<std::int64_t> runs_;
  std::int64_t current_ = 0;
  std::int64_t total_ = 0;
};

/// Time-weighted level histogram over an observation window.
class OccupancyMeter {
 public:
  explicit OccupancyMeter(int levels) : time_(static_cast<std::size_t>(levels), 0.0) {}

  void advance(double now, int level) {
    if (active_) time_[static_cast<std::size_t>(level)] += now - last_;
    last_ = now;
  }
  void start(double now) {
    active_ = true;
    last_ = now;
  }
  void stop() { active_ = false; }

  void finish(ReplicationStats& st) {
    double total = 0.0;
    for (double t : time_) total += t;
    st.occupancy.assign(time_.size(), 0.0);
    st.mean_queue = 0.0;
    if (total <= 0.0) return;
    for (std::size_t n = 0; n < time_.size(); ++n) {
      st.occupancy[n] = time_[n] / total;
      st.mean_queue += static_cast<double>(n) * st.occupancy[n];
    }
  }

 private:
  std::vector<double> time_;
  double last_ = 0.0;
  bool active_ = false;
};

struct Customer {
  bool counted = false;
};

inline int sample_index(std::span<const double> cumulative, double u) {
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  if (it == cumulative.end()) return static_cast<int>(cumulative.size()) - 1;
  return static_cast<int>(it - cumulative.begin());
}

inline ReplicationStats replicate_renovation(const ModelParams& params, const SimConfig& config, int replication) {
  Xoshiro256 rng = stream(config.seed, replication);
  const int n = params.capacity;
  std::vector<double> cumulative(params.q.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < params.q.size(); ++i) cumulative[i] = acc += params.q[i];

  const auto warmup = static_cast<std::int64_t>(config.warmup_fraction * static_cast<double>(config.arrivals));
  const std::int64_t total = config.arrivals;

  ReplicationStats st;
  RunCounter runs(config.k_max);
  OccupancyMeter meter(n + 2);
  std::deque<Customer> waiting;
  bool busy = false;
  Customer in_service;
  std::int64_t generated = 0;
  std::int64_t unresolved = 0;
  double next_arrival = rng.exponential(params.lambda);
  double next_completion = std::numeric_limits<double>::infinity();
  auto level = [&] { return static_cast<int>(waiting.size()) + (busy ? 1 : 0); };

  auto lose = [&](const Customer& c, bool blocked) {
    if (!c.counted) return;
    --unresolved;
    (blocked ? st.blocked : st.renovated) += 1;
    runs.loss();
  };
  auto start_service = [&](double now, Customer c) {
    busy = true;
    in_service = c;
    next_completion = now + params.d;
    if (c.counted) {
      --unresolved;
      ++st.served;
      runs.accept();
    }
  };

  while (generated < total || unresolved > 0) {
    if (next_arrival < next_completion) {
      const double now = next_arrival;
      meter.advance(now, level());
      if (generated == warmup) meter.start(now);
      if (generated == total) meter.stop();
      Customer c{generated >= warmup && generated < total};
      ++generated;
      if (c.counted) {
        ++st.arrivals;
        ++unresolved;
      }
      if (!busy) {
        start_service(now, c);
      } else if (static_cast<int>(waiting.size()) < n) {
        waiting.push_back(c);
      } else {
        lose(c, true);
      }
      next_arrival = now + rng.exponential(params.lambda);
    } else {
      const double now = next_completion;
      meter.advance(now, level());
      busy = false;
      next_completion = std::numeric_limits<double>::infinity();
      const int queued = static_cast<int>(waiting.size());
      if (queued >= 1) {
        const int want = sample_index(cumulative, rng.uniform());
        int remove = 0;
        if (want < queued) {
          remove = want;
        } else if (params.option == Option::Option1) {
          remove = queued - 1;
        }
        for (int k = 0; k < remove; ++k) {
          lose(waiting.front(), false);
          waiting.pop_front();
        }
        const Customer head = waiting.front();
        waiting.pop_front();
        start_service(now, head);
      }
    }
  }
  st.in_system_at_end = unresolved;
  meter.finish(st);
  runs.finish(st);
  return st;
}

inline ReplicationStats replicate_red(const RedModel& model, const SimConfig& config, int replication) {
  Xoshiro256 rng = stream(config.seed, replication);
  const int c = model.capacity;
  const auto warmup = static_cast<std::int64_t>(config.warmup_fraction * static_cast<double>(config.arrivals));
  const std::int64_t total = config.arrivals;

  ReplicationStats st;
  RunCounter runs(config.k_max);
  OccupancyMeter meter(c + 1);
  int present = 0;
  std::int64_t generated = 0;
  double next_arrival = rng.exponential(model.lambda);
  double next_departure = std::numeric_limits<double>::infinity();

  while (generated < total) {
    if (next_arrival < next_departure) {
      const double now = next_arrival;
      meter.advance(now, present);
      if (generated == warmup) meter.start(now);
      const bool counted = generated >= warmup;
      ++generated;
      const bool dropped = rng.uniform() < model.drop[static_cast<std::size_t>(present)];
      if (counted) {
        ++st.arrivals;
        if (dropped) {
          ++st.blocked;
          runs.loss();
        } else {
          ++st.served;
          runs.accept();
        }
      }
      if (!dropped) {
        if (present == 0) next_departure = now + rng.exponential(model.mu);
        ++present;
      }
      next_arrival = now + rng.exponential(model.lambda);
    } else {
      const double now = next_departure;
      meter.advance(now, present);
      --present;
      next_departure = present > 0 ? now + rng.exponential(model.mu) : std::numeric_limits<double>::infinity();
    }
  }
  // Admitted customers count as served; those still present are already safe.
  meter.finish(st);
  runs.finish(st);
  return st;
}

template <class Fn>
std::vector<ReplicationStats> run_replications(const SimConfig& config, Fn&& one) {
  std::vector<ReplicationStats> out(static_cast<std::size_t>(config.replications));
  unsigned workers = config.threads > 0 ? static_cast<unsigned>(config.threads) : std::thread::hardware_concurrency();
  workers = std::clamp(workers, 1u, static_cast<unsigned>(config.replications));
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int r = static_cast<int>(w); r < config.replications; r += static_cast<int>(workers)) {
        out[static_cast<std::size_t>(r)] = one(r);
      }
    });
  }
  pool.clear();
  return out;
}

inline SimReport summarize(std::vector<ReplicationStats> reps, int levels, int k_max) {
  SimReport rep;
  auto collect = [&](std::string name, auto&& value) {
    std::vector<double> v;
    v.reserve(reps.size());
    for (const auto& s : reps) v.push_back(value(s));
    return merge_replications(std::move(v), std::move(name));
  };
  auto frac = [](std::int64_t num, std::int64_t den) {
    return den > 0 ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
  };
  rep.blocked_prob = collect("blocked_prob", [&](const ReplicationStats& s) { return frac(s.blocked, s.arrivals); });
  rep.renovated_prob = collect("renovated_prob", [&](const ReplicationStats& s) { return frac(s.renovated, s.arrivals); });
  rep.loss_prob = collect("loss_prob", [&](const ReplicationStats& s) { return frac(s.blocked + s.renovated, s.arrivals); });
  rep.mean_queue = collect("mean_queue", [](const ReplicationStats& s) { return s.mean_queue; });
  for (int n = 0; n < levels; ++n) {
    rep.occupancy.push_back(collect("occupancy[" + std::to_string(n) + "]",
                                    [n](const ReplicationStats& s) { return s.occupancy[static_cast<std::size_t>(n)]; }));
  }
  for (int k = 1; k <= k_max; ++k) {
    rep.cl_histogram.push_back(collect("cl_pmf[" + std::to_string(k) + "]", [&](const ReplicationStats& s) {
      return frac(s.runs[static_cast<std::size_t>(k - 1)], s.total_runs);
    }));
  }
  rep.replications = std::move(reps);
  return rep;
}

}  // namespace detail

inline SimReport simulate_renovation(const ModelParams& params, const SimConfig& config) {
  validate(params);
  validate(config);
  auto reps = detail::run_replications(config, [&](int r) { return detail::replicate_renovation(params, config, r); });
  return detail::summarize(std::move(reps), params.capacity + 2, config.k_max);
}

inline SimReport simulate_red(const RedModel& model, const SimConfig& config) {
  validate(model);
  validate(config);
  auto reps = detail::run_replications(config, [&](int r) { return detail::replicate_red(model, config, r); });
  return detail::summarize(std::move(reps), model.capacity + 1, config.k_max);
}

}  // namespace renoq
