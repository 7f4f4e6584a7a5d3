#pragma once

// End-to-end analytic pipeline for the renovation model.

#include <array>

#include "renoq/chain.hpp"
#include "renoq/loss.hpp"
#include "renoq/model.hpp"
#include "renoq/stationary.hpp"

namespace renoq {

struct Analysis {
  ModelParams params;
  PoissonKernel kernel;
  EmbeddedChain chain;
  StationaryProfile profile;
  LossBreakdown loss;
  std::array<double, 4> moments{};  // E N^1..E N^4

  double mean_number() const { return moments[0]; }
};

inline LossBreakdown loss_probability(const StationaryProfile& prof, const ModelParams& params,
                                      const PoissonKernel& kernel) {
  if (params.option == Option::Option1) {
    return loss_option1(prof, risks_option1(params, kernel), params);
  }
  return loss_option2(prof, risk_option2(prof, params, kernel), params);
}

inline Analysis analyze(const ModelParams& params) {
  Analysis a;
  a.params = validate(params);
  a.kernel = make_kernel(params);
  a.chain = solve_chain(params, a.kernel);
  a.profile = stationary_profile(a.chain, params, a.kernel);
  a.loss = loss_probability(a.profile, params, a.kernel);
  for (int m = 1; m <= 4; ++m) a.moments[static_cast<std::size_t>(m - 1)] = queue_moments(a.profile.pn, m);
  return a;
}

}  // namespace renoq
