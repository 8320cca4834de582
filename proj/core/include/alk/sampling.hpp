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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace alk {

struct GaussianMarginal {
  double mean = 0.0;
  double std = 1.0;
};

struct WeibullMarginal {
  double scale = 1.0;  // m/s for wind speed
  double shape = 1.0;
};

/// Resampled historical data; values are kept sorted ascending.
struct EmpiricalMarginal {
  std::vector<double> values;
  std::string units;
};

struct MarginalSpec {
  std::string name;
  std::variant<GaussianMarginal, WeibullMarginal, EmpiricalMarginal> dist;

  void validate() const;

  /// Inverse CDF. Empirical marginals use the type-1 (step) quantile.
  double quantile(double u) const;
  double cdf(double x) const;
  double median() const;

  /// Maps a standard-normal score to this marginal (quantile(Phi(z)) evaluated
  /// without losing tail precision).
  double from_normal(double z) const;
};

MarginalSpec gaussian(std::string name, double mean, double std);
MarginalSpec weibull(std::string name, double scale, double shape);
MarginalSpec empirical(std::string name, std::vector<double> values, std::string units = {});

/// Equi-correlated block of the Gaussian copula.
struct CorrelationGroup {
  std::vector<std::size_t> members;
  double rho = 0.0;
};

struct UncertaintySpec {
  std::vector<MarginalSpec> dims;
  // Dimensions not listed in any group are independent singletons.
  std::vector<CorrelationGroup> groups;
  std::uint64_t seed = 0;

  std::size_t dimension() const { return dims.size(); }
  void validate() const;

  /// Every dimension assigned to exactly one group, singletons filled in,
  /// in order of first member.
  std::vector<CorrelationGroup> partition() const;

  /// Per-dimension medians, used as the nominal operating point.
  Eigen::VectorXd nominal() const;
};

enum class SampleTag { Initial, Pool, Enriched };

struct SampleSet {
  Eigen::MatrixXd values;  // N x M, one sample per row
  SampleTag tag = SampleTag::Pool;
  int iteration = 0;  // enrichment iteration for SampleTag::Enriched

  std::size_t size() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t dimension() const { return static_cast<std::size_t>(values.cols()); }
};

/// Latin hypercube design with the copula correlation imposed by rank
/// reordering (Iman-Conover), so every dimension keeps exactly one sample per
/// equal-probability stratum.
SampleSet lhs_sample(const UncertaintySpec& spec, std::size_t n);

/// Independent copula draws. Rows are generated sequentially, so the first k
/// rows of mc_sample(spec, n) equal mc_sample(spec, k).
SampleSet mc_sample(const UncertaintySpec& spec, std::size_t n);

struct WindTurbineCurve {
  double rated_power = 1.5;  // MW
  double cut_in = 3.0;       // m/s
  double rated_speed = 12.0;
  double cut_out = 25.0;

  void validate() const;
};

/// Piecewise-cubic turbine power curve: 0 below cut-in, cubic ramp up to the
/// rated speed, rated power up to and including cut-out, 0 above cut-out.
double wind_power(const WindTurbineCurve& curve, double v);

/// Reads a numeric column of a headed CSV file into an empirical marginal.
MarginalSpec load_empirical(const std::filesystem::path& path, const std::string& column);

}  // namespace alk
