/*
 * Copyright 2026 The alk Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>

#include "alk/error.hpp"
#include "alk/evaluation.hpp"
#include "alk/rng.hpp"

namespace alk {

namespace {

// Brute-force reference of the four-branch system (k = 6), 10^6 samples.
constexpr double kFourBranchPf = 0.004449;
constexpr std::uint64_t kFourBranchSeed = 20260101;
constexpr std::size_t kFourBranchSamples = 1000000;

double four_branch(std::span<const double> x) {
  constexpr double k = 6.0;
  const double s = (x[0] + x[1]) / std::sqrt(2.0);
  const double d = x[0] - x[1];
  return std::min({3.0 + 0.1 * d * d - s, 3.0 + 0.1 * d * d + s, d + k / std::sqrt(2.0), -d + k / std::sqrt(2.0)});
}

}  // namespace

UncertaintySpec AnalyticLimitState::uncertainty() const {
  UncertaintySpec s;
  for (std::size_t i = 0; i < dimension; ++i) s.dims.push_back(gaussian("x" + std::to_string(i + 1), 0.0, 1.0));
  return s;
}

AnalyticLimitState make_analytic(const std::string& name, const AnalyticParams& params) {
  AnalyticLimitState a;
  a.name = name;
  if (name == "four_branch") {
    if (params.dimension != 0 && params.dimension != 2) throw ConfigError("analytic 'four_branch' is two-dimensional");
    if (params.pf != 0.0) throw ConfigError("analytic 'four_branch' has a fixed failure probability");
    a.dimension = 2;
    a.evaluator = std::make_shared<FunctionEvaluator>(2, four_branch);
    a.reference_pf = kFourBranchPf;
    a.reference_seed = kFourBranchSeed;
    a.reference_samples = kFourBranchSamples;
    a.provenance = "brute-force Monte Carlo, 10^6 samples, seed " + std::to_string(kFourBranchSeed);
    return a;
  }
  const double pf = params.pf == 0.0 ? 1e-2 : params.pf;
  if (!(pf > 0.0 && pf < 1.0)) throw ConfigError("analytic pf must lie strictly between 0 and 1");
  if (name == "linear") {
    // beta_0 - sum x_i with x ~ N(0, I): P_f = Phi(-beta_0 / sqrt(M)).
    const std::size_t m = params.dimension == 0 ? 2 : params.dimension;
    const double beta0 = -normal_quantile(pf) * std::sqrt(static_cast<double>(m));
    a.dimension = m;
    a.evaluator = std::make_shared<FunctionEvaluator>(m, [beta0](std::span<const double> x) {
      double s = 0.0;
      for (double v : x) s += v;
      return beta0 - s;
    });
    a.closed_form = normal_cdf(-beta0 / std::sqrt(static_cast<double>(m)));
    a.reference_pf = *a.closed_form;
    a.provenance = "closed form Phi(-beta_0 / sqrt(M))";
    return a;
  }
  if (name == "quadratic") {
    // c - |x|^2: failure outside the sphere of radius sqrt(c), P_f = P(chi2_M > c).
    const std::size_t m = params.dimension == 0 ? 2 : params.dimension;
    const boost::math::chi_squared chi(static_cast<double>(m));
    const double c = boost::math::quantile(boost::math::complement(chi, pf));
    a.dimension = m;
    a.evaluator = std::make_shared<FunctionEvaluator>(m, [c](std::span<const double> x) {
      double s = 0.0;
      for (double v : x) s += v * v;
      return c - s;
    });
    a.closed_form = boost::math::cdf(boost::math::complement(chi, c));
    a.reference_pf = *a.closed_form;
    a.provenance = "closed form chi-square tail";
    return a;
  }
  if (name == "series") {
    // beta - max_i x_i: any component above beta fails, P_f = 1 - Phi(beta)^M.
    const std::size_t m = params.dimension == 0 ? 6 : params.dimension;
    const double beta = normal_quantile(std::pow(1.0 - pf, 1.0 / static_cast<double>(m)));
    a.dimension = m;
    a.evaluator = std::make_shared<FunctionEvaluator>(m, [beta](std::span<const double> x) {
      return beta - *std::max_element(x.begin(), x.end());
    });
    a.closed_form = 1.0 - std::pow(normal_cdf(beta), static_cast<double>(m));
    a.reference_pf = *a.closed_form;
    a.provenance = "closed form 1 - Phi(beta)^M";
    return a;
  }
  throw ConfigError("unknown analytic limit state '" + name +
                    "' (expected four_branch, linear, quadratic or series)");
}

std::vector<AnalyticLimitState> analytic_suite() {
  return {make_analytic("four_branch"), make_analytic("linear"), make_analytic("quadratic")};
}

double brute_force_pf(const AnalyticLimitState& a, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ConfigError("brute_force_pf: sample count must be positive");
  Rng rng(seed);
  std::vector<double> x(a.dimension);
  std::size_t fails = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : x) v = rng.normal();
    if (a.evaluator->margin(x) < 0.0) ++fails;
  }
  return static_cast<double>(fails) / static_cast<double>(n);
}

}  // namespace alk
