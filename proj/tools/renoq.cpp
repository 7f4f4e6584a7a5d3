// renoq: analyze, simulate, compare and calibrate renovation / RED queues.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "renoq/io.hpp"

namespace {

enum Exit { kOk = 0, kParse = 2, kValidation = 3, kCompareFailed = 4, kInternal = 5 };

struct Flags {
  std::string config;
  std::string format = "json";
  std::string series = "pn";
  std::optional<std::uint64_t> seed;
  std::optional<int> kmax;
  std::optional<int> budget;
  std::optional<std::string> method;
  std::optional<double> target_loss;
  std::optional<double> target_mean_queue;
};

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("renoq");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("RENOQ_LOG")) spdlog::set_level(spdlog::level::from_str(env));
}

void emit(const renoq::Json& doc) { std::cout << doc.dump(2) << '\n'; }

renoq::SimConfig sim_config(const renoq::RunConfig& cfg, const Flags& flags) {
  if (!cfg.simulation) throw renoq::ConfigParseError("config has no 'simulation' section");
  renoq::SimConfig sc = *cfg.simulation;
  if (flags.seed) sc.seed = *flags.seed;
  if (flags.kmax) sc.k_max = *flags.kmax;
  return sc;
}

int cmd_analyze(const renoq::RunConfig& cfg, const Flags& flags) {
  const int kmax = flags.kmax.value_or(renoq::kDefaultKmax);
  if (cfg.model == renoq::ModelKind::Renovation) {
    const auto a = renoq::analyze(cfg.renovation);
    spdlog::info("analytic pi = {}, E N = {}", a.loss.pi, a.mean_number());
    if (flags.format == "csv") {
      std::cout << renoq::csv_series(a.profile.pn);
    } else {
      emit(renoq::analysis_report(a));
    }
    return kOk;
  }
  const auto r = renoq::analyze_red(cfg.red, kmax);
  if (r.cl.deficit >= renoq::kClTailTolerance) {
    spdlog::warn("run-length pmf truncated at k={} with deficit {}; moments omitted", kmax, r.cl.deficit);
  }
  if (flags.format == "csv") {
    std::cout << (flags.series == "cl" ? renoq::csv_series(r.cl.pmf, 1) : renoq::csv_series(r.pn));
  } else {
    emit(renoq::analysis_report(r));
  }
  return kOk;
}

renoq::SimReport run_simulation(const renoq::RunConfig& cfg, const renoq::SimConfig& sc) {
  spdlog::info("simulating {} replications x {} arrivals, seed {}", sc.replications, sc.arrivals, sc.seed);
  return cfg.model == renoq::ModelKind::Renovation ? renoq::simulate_renovation(cfg.renovation, sc)
                                                   : renoq::simulate_red(cfg.red, sc);
}

int cmd_simulate(const renoq::RunConfig& cfg, const Flags& flags) {
  const auto sc = sim_config(cfg, flags);
  const auto rep = run_simulation(cfg, sc);
  if (flags.format == "csv") {
    std::cout << (flags.series == "cl" ? renoq::csv_series(std::span<const renoq::SimEstimate>(rep.cl_histogram), 1)
                                       : renoq::csv_series(std::span<const renoq::SimEstimate>(rep.occupancy)));
    return kOk;
  }
  const bool renovation = cfg.model == renoq::ModelKind::Renovation;
  const auto params = renovation ? renoq::to_json(cfg.renovation) : renoq::to_json(cfg.red);
  emit(renoq::simulation_report(rep, sc, params, renovation ? "renovation" : "red"));
  return kOk;
}

int cmd_compare(const renoq::RunConfig& cfg, const Flags& flags) {
  const auto sc = sim_config(cfg, flags);
  const auto rep = run_simulation(cfg, sc);
  std::vector<renoq::ComparisonRow> rows;
  if (cfg.model == renoq::ModelKind::Renovation) {
    rows = renoq::compare_renovation(renoq::analyze(cfg.renovation), rep);
  } else {
    rows = renoq::compare_red(renoq::analyze_red(cfg.red, sc.k_max), rep);
  }
  if (flags.format == "json") {
    emit(renoq::comparison_json(rows));
  } else {
    std::cout << renoq::comparison_table(rows);
  }
  return renoq::all_contained(rows) ? kOk : kCompareFailed;
}

int cmd_calibrate(const renoq::RunConfig& cfg, const Flags& flags) {
  if (cfg.model != renoq::ModelKind::Renovation) throw renoq::ConfigParseError("calibrate needs a renovation model");
  renoq::CalibrationSettings cs = cfg.calibration.value_or(renoq::CalibrationSettings{});
  if (flags.target_loss) cs.target.target_loss = *flags.target_loss;
  if (flags.target_mean_queue) cs.target.target_mean_queue = *flags.target_mean_queue;
  if (flags.budget) cs.budget = *flags.budget;
  if (flags.seed) cs.seed = *flags.seed;
  if (flags.method) cs.method = *flags.method == "pso" ? renoq::SearchMethod::PSO : renoq::SearchMethod::DirectSearch;
  const auto res = renoq::calibrate(cfg.renovation, cs.target, cs.budget, cs.method, cs.seed);
  spdlog::info("calibration finished: objective {} after {} evaluations", res.objective, res.evaluations);
  emit(renoq::calibration_report(res, cfg.renovation, cs));
  return kOk;
}

int exit_code(renoq::ErrorCode code) {
  switch (code) {
    case renoq::ErrorCode::SingularChain:
    case renoq::ErrorCode::ConsistencyError:
      return kInternal;
    default:
      return kValidation;
  }
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Finite-buffer queues with renovation and RED dropping"};
  app.require_subcommand(1);
  Flags flags;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", flags.config, "JSON run configuration")->required();
    sub->add_option("--format", flags.format, "output format")->check(CLI::IsMember({"json", "csv", "text"}));
    sub->add_option("--seed", flags.seed, "override the configured seed");
    sub->add_option("--kmax", flags.kmax, "length of the run-length pmf")->check(CLI::PositiveNumber);
  };
  auto* analyze = app.add_subcommand("analyze", "analytic stationary and loss characteristics");
  add_common(analyze);
  analyze->add_option("--series", flags.series, "CSV series")->check(CLI::IsMember({"pn", "cl"}));
  auto* simulate = app.add_subcommand("simulate", "replicated discrete-event simulation");
  add_common(simulate);
  simulate->add_option("--series", flags.series, "CSV series")->check(CLI::IsMember({"pn", "cl"}));
  auto* compare = app.add_subcommand("compare", "analytic values against simulated confidence intervals");
  add_common(compare);
  compare->get_option("--format")->default_str("text");
  auto* calibrate = app.add_subcommand("calibrate", "search for a renovation vector meeting targets");
  add_common(calibrate);
  calibrate->add_option("--budget", flags.budget, "analytic evaluation budget");
  calibrate->add_option("--method", flags.method, "search method")->check(CLI::IsMember({"direct", "pso"}));
  calibrate->add_option("--target-loss", flags.target_loss, "target loss probability");
  calibrate->add_option("--target-mean-queue", flags.target_mean_queue, "target mean number in system");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kParse;
  }
  if (compare->parsed() && compare->count("--format") == 0) flags.format = "text";

  try {
    const auto cfg = renoq::load_config(flags.config);
    if (analyze->parsed()) return cmd_analyze(cfg, flags);
    if (simulate->parsed()) return cmd_simulate(cfg, flags);
    if (compare->parsed()) return cmd_compare(cfg, flags);
    return cmd_calibrate(cfg, flags);
  } catch (const renoq::ConfigParseError& e) {
    spdlog::error("{}", e.what());
    return kParse;
  } catch (const renoq::Error& e) {
    spdlog::error("{}", e.what());
    return exit_code(e.code());
  } catch (const std::exception& e) {
    spdlog::error("internal error: {}", e.what());
    return kInternal;
  }
}
