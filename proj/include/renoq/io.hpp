#pragma once

// Run configuration documents and machine-readable reports for the command
// line front end.

#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "renoq/analysis.hpp"
#include "renoq/calibration.hpp"
#include "renoq/consecutive_loss.hpp"
#include "renoq/simulator.hpp"

namespace renoq {

using Json = nlohmann::ordered_json;

/// Malformed document: unreadable file, bad JSON, unknown key or wrong type.
class ConfigParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ModelKind { Renovation, Red };

struct CalibrationSettings {
  CalibrationTarget target;
  int budget = 500;
  SearchMethod method = SearchMethod::DirectSearch;
  std::uint64_t seed = 1;
};

struct RunConfig {
  ModelKind model = ModelKind::Renovation;
  ModelParams renovation;
  RedModel red;
  std::optional<SimConfig> simulation;
  std::optional<CalibrationSettings> calibration;
};

namespace detail {

inline void reject_unknown(const Json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigParseError(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.contains(key)) throw ConfigParseError("unknown key '" + key + "' in " + where);
  }
}

template <class T>
T field(const Json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigParseError("missing key '" + key + "' in " + where);
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigParseError("key '" + key + "' in " + where + " has the wrong type");
  }
}

template <class T>
T field_or(const Json& obj, const std::string& key, T fallback, const std::string& where) {
  return obj.contains(key) ? field<T>(obj, key, where) : fallback;
}

}  // namespace detail

inline RunConfig parse_config(const Json& doc) {
  using detail::field;
  using detail::field_or;
  detail::reject_unknown(doc, {"model", "params", "simulation", "calibration"}, "config");
  RunConfig cfg;
  const auto model = field<std::string>(doc, "model", "config");
  if (model == "renovation") {
    cfg.model = ModelKind::Renovation;
  } else if (model == "red") {
    cfg.model = ModelKind::Red;
  } else {
    throw ConfigParseError("model must be 'renovation' or 'red'");
  }
  if (!doc.contains("params")) throw ConfigParseError("missing key 'params' in config");
  const Json& p = doc.at("params");

  if (cfg.model == ModelKind::Renovation) {
    detail::reject_unknown(p, {"lambda", "d", "capacity", "q", "option"}, "params");
    auto& m = cfg.renovation;
    m.lambda = field<double>(p, "lambda", "params");
    m.d = field<double>(p, "d", "params");
    m.capacity = field<int>(p, "capacity", "params");
    m.q = field<std::vector<double>>(p, "q", "params");
    const auto opt = field_or<std::string>(p, "option", "option1", "params");
    if (opt == "option1") {
      m.option = Option::Option1;
    } else if (opt == "option2") {
      m.option = Option::Option2;
    } else {
      throw ConfigParseError("option must be 'option1' or 'option2'");
    }
  } else {
    detail::reject_unknown(p, {"lambda", "mu", "capacity", "drop", "red_profile"}, "params");
    auto& m = cfg.red;
    m.lambda = field<double>(p, "lambda", "params");
    m.mu = field<double>(p, "mu", "params");
    m.capacity = field<int>(p, "capacity", "params");
    if (p.contains("drop") == p.contains("red_profile")) {
      throw ConfigParseError("params needs exactly one of 'drop' or 'red_profile'");
    }
    if (p.contains("drop")) {
      m.drop = field<std::vector<double>>(p, "drop", "params");
    } else {
      const Json& r = p.at("red_profile");
      detail::reject_unknown(r, {"min_th", "max_th", "p_max"}, "red_profile");
      m.drop = red_drop_profile(field<int>(r, "min_th", "red_profile"), field<int>(r, "max_th", "red_profile"),
                                field<double>(r, "p_max", "red_profile"), m.capacity);
    }
  }

  if (doc.contains("simulation")) {
    const Json& s = doc.at("simulation");
    detail::reject_unknown(s, {"arrivals", "replications", "seed", "warmup_fraction", "k_max", "threads"}, "simulation");
    SimConfig sc;
    sc.arrivals = field_or<std::int64_t>(s, "arrivals", sc.arrivals, "simulation");
    sc.replications = field_or<int>(s, "replications", sc.replications, "simulation");
    sc.seed = field_or<std::uint64_t>(s, "seed", sc.seed, "simulation");
    sc.warmup_fraction = field_or<double>(s, "warmup_fraction", sc.warmup_fraction, "simulation");
    sc.k_max = field_or<int>(s, "k_max", sc.k_max, "simulation");
    sc.threads = field_or<int>(s, "threads", sc.threads, "simulation");
    cfg.simulation = sc;
  }

  if (doc.contains("calibration")) {
    const Json& c = doc.at("calibration");
    detail::reject_unknown(c, {"target_loss", "target_mean_queue", "weights", "budget", "method", "seed"}, "calibration");
    CalibrationSettings cs;
    if (c.contains("target_loss")) cs.target.target_loss = field<double>(c, "target_loss", "calibration");
    if (c.contains("target_mean_queue")) cs.target.target_mean_queue = field<double>(c, "target_mean_queue", "calibration");
    if (c.contains("weights")) {
      const auto w = field<std::vector<double>>(c, "weights", "calibration");
      if (w.size() != 2) throw ConfigParseError("weights must hold two numbers");
      cs.target.weight_loss = w[0];
      cs.target.weight_queue = w[1];
    }
    cs.budget = field_or<int>(c, "budget", cs.budget, "calibration");
    cs.seed = field_or<std::uint64_t>(c, "seed", cs.seed, "calibration");
    const auto method = field_or<std::string>(c, "method", "direct", "calibration");
    if (method == "direct") {
      cs.method = SearchMethod::DirectSearch;
    } else if (method == "pso") {
      cs.method = SearchMethod::PSO;
    } else {
      throw ConfigParseError("method must be 'direct' or 'pso'");
    }
    cfg.calibration = cs;
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigParseError("cannot read config file '" + path + "'");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigParseError(std::string("malformed config: ") + e.what());
  }
  return parse_config(doc);
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline Json to_json(const ModelParams& p) {
  return Json{{"lambda", p.lambda}, {"d", p.d}, {"capacity", p.capacity}, {"q", p.q}, {"option", to_string(p.option)}};
}

inline Json to_json(const RedModel& m) {
  return Json{{"lambda", m.lambda}, {"mu", m.mu}, {"capacity", m.capacity}, {"drop", m.drop}};
}

inline Json to_json(const SimEstimate& e) {
  Json hw = std::isfinite(e.half_width_99) ? Json(e.half_width_99) : Json("inf");
  return Json{{"mean", e.mean}, {"half_width_99", hw}, {"replications", e.replication_values}};
}

inline Json to_json(const SimConfig& c) {
  return Json{{"arrivals", c.arrivals},
              {"replications", c.replications},
              {"seed", c.seed},
              {"warmup_fraction", c.warmup_fraction},
              {"k_max", c.k_max}};
}

inline Json analysis_report(const Analysis& a) {
  return Json{{"model", "renovation"},
              {"params", to_json(a.params)},
              {"pn", a.profile.pn},
              {"moments", a.moments},
              {"loss", {{"pi", a.loss.pi}, {"blocked", a.loss.blocked}, {"renovated", a.loss.renovated}}},
              {"boundary_densities", a.profile.p0},
              {"embedded", a.profile.pplus}};
}

struct RedAnalysis {
  RedModel model;
  std::vector<double> pn;
  ClDistribution cl;
  double mean_number = 0.0;
  double drop_probability = 0.0;
  std::optional<double> cl_mean;
  std::optional<double> cl_second_moment;
};

inline RedAnalysis analyze_red(const RedModel& model, int k_max) {
  RedAnalysis r;
  r.model = validate(model);
  r.pn = red_stationary(model);
  r.mean_number = queue_moments(r.pn, 1);
  for (std::size_t n = 0; n < r.pn.size(); ++n) r.drop_probability += r.pn[n] * model.drop[n];
  r.cl = cl_distribution(model, r.pn, k_max);
  if (r.cl.deficit < kClTailTolerance) {
    r.cl_mean = cl_moments(r.cl, 1);
    r.cl_second_moment = cl_moments(r.cl, 2);
  }
  return r;
}

inline Json analysis_report(const RedAnalysis& r) {
  auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
  return Json{{"model", "red"},
              {"params", to_json(r.model)},
              {"pn", r.pn},
              {"mean_number", r.mean_number},
              {"drop_probability", r.drop_probability},
              {"cl_pmf", r.cl.pmf},
              {"cl_deficit", r.cl.deficit},
              {"cl_moments", {{"mean", opt(r.cl_mean)}, {"second", opt(r.cl_second_moment)}}}};
}

inline Json simulation_report(const SimReport& rep, const SimConfig& cfg, const Json& params, const char* model) {
  Json occ = Json::array();
  for (const auto& e : rep.occupancy) occ.push_back(to_json(e));
  Json cl = Json::array();
  for (const auto& e : rep.cl_histogram) cl.push_back(to_json(e));
  Json flow = Json::array();
  for (const auto& s : rep.replications) {
    flow.push_back({{"arrivals", s.arrivals},
                    {"served", s.served},
                    {"blocked", s.blocked},
                    {"renovated", s.renovated},
                    {"in_system_at_end", s.in_system_at_end},
                    {"loss_runs", s.total_runs}});
  }
  return Json{{"model", model},
              {"params", params},
              {"simulation", to_json(cfg)},
              {"loss_prob", to_json(rep.loss_prob)},
              {"blocked_prob", to_json(rep.blocked_prob)},
              {"renovated_prob", to_json(rep.renovated_prob)},
              {"mean_queue", to_json(rep.mean_queue)},
              {"occupancy", occ},
              {"cl_histogram", cl},
              {"flow", flow}};
}

inline Json calibration_report(const CalibrationResult& res, const ModelParams& base, const CalibrationSettings& cs) {
  ModelParams fitted = base;
  fitted.q = res.q;
  const Analysis a = analyze(fitted);
  Json trace = Json::array();
  for (const auto& t : res.trace) trace.push_back({{"q", t.q}, {"objective", t.objective}, {"best", t.best}});
  auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
  return Json{{"method", to_string(cs.method)},
              {"seed", cs.seed},
              {"budget", cs.budget},
              {"target", {{"loss", opt(cs.target.target_loss)}, {"mean_queue", opt(cs.target.target_mean_queue)}}},
              {"q", res.q},
              {"objective", res.objective},
              {"evaluations", res.evaluations},
              {"budget_exhausted", res.budget_exhausted},
              {"achieved", {{"pi", a.loss.pi}, {"mean_queue", a.mean_number()}}},
              {"trace", trace}};
}

/// Full-precision decimal for CSV cells.
inline std::string format_real(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_series(std::span<const double> values, std::size_t first_index = 0) {
  std::ostringstream out;
  out << "index,value\n";
  for (std::size_t i = 0; i < values.size(); ++i) out << first_index + i << ',' << format_real(values[i]) << '\n';
  return out.str();
}

inline std::string csv_series(std::span<const SimEstimate> values, std::size_t first_index = 0) {
  std::ostringstream out;
  out << "index,value,ci_half_width\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    out << first_index + i << ',' << format_real(values[i].mean) << ',' << format_real(values[i].half_width_99) << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Analytic vs simulated comparison
// ---------------------------------------------------------------------------

struct ComparisonRow {
  std::string metric;
  double analytic = 0.0;
  double simulated = 0.0;
  double half_width = 0.0;
  bool contained = false;
};

inline ComparisonRow compare_metric(std::string name, double analytic, const SimEstimate& est) {
  return {std::move(name), analytic, est.mean, est.half_width_99, est.contains(analytic)};
}

inline std::vector<ComparisonRow> compare_renovation(const Analysis& a, const SimReport& sim) {
  std::vector<ComparisonRow> rows;
  rows.push_back(compare_metric("loss_prob", a.loss.pi, sim.loss_prob));
  rows.push_back(compare_metric("mean_queue", a.mean_number(), sim.mean_queue));
  for (std::size_t n = 0; n < a.profile.pn.size(); ++n) {
    rows.push_back(compare_metric("P[" + std::to_string(n) + "]", a.profile.pn[n], sim.occupancy[n]));
  }
  return rows;
}

inline std::vector<ComparisonRow> compare_red(const RedAnalysis& a, const SimReport& sim, int cl_terms = 10) {
  std::vector<ComparisonRow> rows;
  rows.push_back(compare_metric("loss_prob", a.drop_probability, sim.loss_prob));
  rows.push_back(compare_metric("mean_queue", a.mean_number, sim.mean_queue));
  for (std::size_t n = 0; n < a.pn.size(); ++n) {
    rows.push_back(compare_metric("P[" + std::to_string(n) + "]", a.pn[n], sim.occupancy[n]));
  }
  const auto terms = std::min({static_cast<std::size_t>(cl_terms), a.cl.pmf.size(), sim.cl_histogram.size()});
  for (std::size_t k = 0; k < terms; ++k) {
    rows.push_back(compare_metric("P{L=" + std::to_string(k + 1) + "}", a.cl.pmf[k], sim.cl_histogram[k]));
  }
  return rows;
}

inline bool all_contained(const std::vector<ComparisonRow>& rows) {
  return std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.contained; });
}

inline std::string comparison_table(const std::vector<ComparisonRow>& rows) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-12s %22s %22s %22s  %s\n", "metric", "analytic", "simulated", "ci_half_width", "verdict");
  out << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-12s %22.15g %22.15g %22.15g  %s\n", r.metric.c_str(), r.analytic, r.simulated,
                  r.half_width, r.contained ? "contained" : "OUTSIDE");
    out << line;
  }
  return out.str();
}

inline Json comparison_json(const std::vector<ComparisonRow>& rows) {
  Json arr = Json::array();
  for (const auto& r : rows) {
    arr.push_back({{"metric", r.metric},
                   {"analytic", r.analytic},
                   {"simulated", r.simulated},
                   {"half_width_99", r.half_width},
                   {"verdict", r.contained ? "contained" : "outside"}});
  }
  return Json{{"rows", arr}, {"all_contained", all_contained(rows)}};
}

}  // namespace renoq
