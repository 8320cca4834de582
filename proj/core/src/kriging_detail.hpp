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

#include <span>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "alk/kriging.hpp"

namespace alk::detail {

// Floor for the standardized process variance, reached when every LOO
// residual vanishes (constant or exactly interpolated outputs).
inline constexpr double kMinProcessVariance = 1e-12;

struct Standardized {
  Eigen::MatrixXd x;
  Eigen::VectorXd t;
  Eigen::VectorXd x_mean, x_scale;
  double y_mean = 0.0, y_scale = 1.0;
};

Standardized standardize(const Eigen::MatrixXd& x, const Eigen::VectorXd& t);

/// Scaled squared distances, rows of `a` against rows of `b`.
Eigen::MatrixXd cross_sq_dist(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, std::span<const double> theta);
Eigen::MatrixXd correlation(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, std::span<const double> theta);

/// Cholesky of r + nu I for nu = nugget, 10 nugget, ... up to max_nugget.
bool factorize_with_nugget(const Eigen::MatrixXd& r, double nugget, double max_nugget, Eigen::LLT<Eigen::MatrixXd>& llt,
                           double& used);

LooAll loo_from_factor(const Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::VectorXd& t, double nugget);

/// LOO sum of squared errors on standardized data; +inf if R cannot be factorized.
double objective(const Standardized& s, std::span<const double> theta, double nugget, double max_nugget);

}  // namespace alk::detail
