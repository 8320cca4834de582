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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace alk {

/// Anisotropic Matern-5/2 correlation
///   d = sqrt(sum_i ((x_i - y_i) / theta_i)^2)
///   R = (1 + sqrt(5) d + 5 d^2 / 3) exp(-sqrt(5) d)
double matern52(std::span<const double> x, std::span<const double> y, std::span<const double> theta);

/// Matern-5/2 as a function of the scaled squared distance d^2.
inline double matern52_from_sq(double d2);

struct FitConfig {
  // Length-scale bounds in standardized input units; one value applies to
  // every dimension, otherwise one entry per dimension.
  std::vector<double> theta_lo{1e-2};
  std::vector<double> theta_hi{1e2};
  std::size_t population = 30;
  std::size_t generations = 50;
  std::size_t polish_iterations = 100;  // Nelder-Mead iterations
  double nugget = 1e-8;
  double max_nugget = 1e-4;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::optional<std::vector<double>> warm_start;  // previous theta, seeds the population

  void validate(std::size_t dimension) const;
  double lower(std::size_t d) const { return theta_lo.size() == 1 ? theta_lo[0] : theta_lo[d]; }
  double upper(std::size_t d) const { return theta_hi.size() == 1 ? theta_hi[0] : theta_hi[d]; }
};

/// Leave-one-out prediction at x^(n) from the dataset with row n removed.
struct LooPoint {
  double mean = 0.0;
  double normalized_variance = 0.0;  // 1 - r'R^-1 r + u^2/Q
};

struct LooAll {
  Eigen::VectorXd mean;
  Eigen::VectorXd normalized_variance;
  double sse = 0.0;  // sum of squared LOO residuals
};

/// Literal remove-and-refit (O(N^3) per point); the reference for loo_all.
LooPoint loo_refit(const Eigen::MatrixXd& x, const Eigen::VectorXd& t, std::span<const double> theta,
                   std::size_t leave_out, double nugget);

/// All LOO predictions from one factorization of the full correlation matrix
/// via the bordered-system identity. Throws NumericalError if R is not
/// positive definite at this nugget.
LooAll loo_all(const Eigen::MatrixXd& x, const Eigen::VectorXd& t, std::span<const double> theta, double nugget);

struct Prediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

/// Ordinary Kriging surrogate with constant trend. Inputs and outputs are
/// standardized internally; every public quantity is in original units
/// except theta, which refers to standardized inputs.
class KrigingModel {
 public:
  KrigingModel() = default;

  /// Builds the predictor for fixed hyperparameters. The process variance
  /// comes from the normalized LOO residuals; the nugget escalates x10 from
  /// `nugget` up to `max_nugget` if R is not numerically positive definite.
  static KrigingModel build(const Eigen::MatrixXd& x, const Eigen::VectorXd& t, std::span<const double> theta,
                            double nugget = 1e-8, double max_nugget = 1e-4);

  double predict_mean(std::span<const double> x0) const;
  double predict_variance(std::span<const double> x0) const;
  /// Batched prediction, one row of `x` per point.
  Prediction predict(const Eigen::MatrixXd& x) const;

  std::size_t size() const { return static_cast<std::size_t>(xs_.rows()); }
  std::size_t dimension() const { return static_cast<std::size_t>(xs_.cols()); }
  const std::vector<double>& theta() const { return theta_; }
  double nugget() const { return nugget_; }
  double beta() const { return beta_ * y_scale_ + y_mean_; }
  double process_variance() const { return sigma2_ * y_scale_ * y_scale_; }
  double loo_objective() const { return loo_sse_; }  // standardized units
  const Eigen::MatrixXd& inputs() const { return x_raw_; }
  const Eigen::VectorXd& outputs() const { return t_raw_; }
  const Eigen::VectorXd& input_mean() const { return x_mean_; }
  const Eigen::VectorXd& input_scale() const { return x_scale_; }
  double output_mean() const { return y_mean_; }
  double output_scale() const { return y_scale_; }

  std::string to_json() const;
  static KrigingModel from_json(const std::string& text);

  friend bool operator==(const KrigingModel& a, const KrigingModel& b);

 private:
  void factorize(bool estimate_beta);

  Eigen::MatrixXd x_raw_;
  Eigen::VectorXd t_raw_;
  Eigen::VectorXd x_mean_, x_scale_;
  double y_mean_ = 0.0, y_scale_ = 1.0;
  Eigen::MatrixXd xs_;  // standardized inputs
  Eigen::VectorXd ys_;  // standardized outputs
  std::vector<double> theta_;
  double nugget_ = 0.0;
  double sigma2_ = 0.0;  // standardized
  double beta_ = 0.0;    // standardized
  double loo_sse_ = 0.0;

  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd alpha_;  // R^-1 (y - 1 beta)
  Eigen::VectorXd ones_w_;  // L^-1 1
  double q_ = 0.0;          // 1' R^-1 1
};

struct FitResult {
  KrigingModel model;
  double objective = 0.0;         // LOO sum of squared errors at theta, standardized
  std::size_t evaluations = 0;    // objective evaluations
  double best_population_objective = 0.0;  // best value seen among GA members
};

/// LOO-CV hyperparameter estimation: genetic search over log(theta) followed
/// by a Nelder-Mead polish from the best member.
FitResult fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& t, const FitConfig& cfg);

/// The LOO objective used by fit(), for given theta in standardized units.
double loo_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& t, std::span<const double> theta,
                     double nugget = 1e-8, double max_nugget = 1e-4);

inline double matern52_from_sq(double d2) {
  const double d = std::sqrt(d2);
  constexpr double s5 = 2.23606797749978969641;
  return (1.0 + s5 * d + (5.0 / 3.0) * d2) * std::exp(-s5 * d);
}

}  // namespace alk
