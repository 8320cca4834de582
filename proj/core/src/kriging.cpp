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

#include "alk/kriging.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "alk/error.hpp"
#include "json_util.hpp"
#include "kriging_detail.hpp"

namespace alk {

namespace detail {

Eigen::MatrixXd cross_sq_dist(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, std::span<const double> theta) {
  const auto m = a.cols();
  Eigen::ArrayXXd d2 = Eigen::ArrayXXd::Zero(a.rows(), b.rows());
  for (Eigen::Index k = 0; k < m; ++k) {
    const double w = 1.0 / (theta[static_cast<std::size_t>(k)] * theta[static_cast<std::size_t>(k)]);
    d2 += (a.col(k).array().replicate(1, b.rows()).rowwise() - b.col(k).array().transpose()).square() * w;
  }
  return d2.matrix();
}

Eigen::MatrixXd correlation(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, std::span<const double> theta) {
  constexpr double s5 = 2.23606797749978969641;
  const Eigen::ArrayXXd d2 = cross_sq_dist(a, b, theta).array();
  const Eigen::ArrayXXd d = d2.sqrt();
  return ((1.0 + s5 * d + (5.0 / 3.0) * d2) * (-s5 * d).exp()).matrix();
}

bool factorize_with_nugget(const Eigen::MatrixXd& r, double nugget, double max_nugget, Eigen::LLT<Eigen::MatrixXd>& llt,
                           double& used) {
  Eigen::MatrixXd rn = r;
  for (double nu = nugget;; nu *= 10.0) {
    rn.diagonal() = r.diagonal().array() + nu;
    llt.compute(rn);
    if (llt.info() == Eigen::Success && llt.matrixLLT().diagonal().allFinite() &&
        (llt.matrixLLT().diagonal().array() > 0.0).all()) {
      used = nu;
      return true;
    }
    if (nu >= max_nugget * (1.0 - 1e-12) || nu == 0.0) {
      if (nu == 0.0 && max_nugget > 0.0) {
        nu = 1e-16;  // zero nugget requested: escalate from the smallest step
        continue;
      }
      return false;
    }
  }
}

LooAll loo_from_factor(const Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::VectorXd& t, double nugget) {
  const auto n = t.size();
  const Eigen::MatrixXd linv = llt.matrixL().solve(Eigen::MatrixXd::Identity(n, n));
  const Eigen::VectorXd diag_rinv = linv.colwise().squaredNorm().transpose();
  const Eigen::VectorXd g = linv * Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd rinv1 = linv.transpose() * g;
  const double q = g.squaredNorm();
  const double beta = g.dot(linv * t) / q;
  const Eigen::VectorXd resid = (t.array() - beta).matrix();
  const Eigen::VectorXd a = linv.transpose() * (linv * resid);
  const Eigen::VectorXd d = (diag_rinv.array() - rinv1.array().square() / q).matrix();

  LooAll out;
  const Eigen::ArrayXd e = a.array() / d.array();
  out.mean = (t.array() - e).matrix();
  // 1/d is the LOO variance of a noisy observation; the nugget is taken off
  // to get the variance of the noise-free response, floored at rounding level.
  const Eigen::ArrayXd noisy = d.cwiseInverse().array();
  out.normalized_variance = (noisy - nugget).max(noisy * std::numeric_limits<double>::epsilon()).matrix();
  out.sse = e.square().sum();
  return out;
}

Standardized standardize(const Eigen::MatrixXd& x, const Eigen::VectorXd& t) {
  Standardized s;
  const auto n = static_cast<double>(x.rows());
  s.x_mean = x.colwise().mean().transpose();
  s.x_scale = ((x.rowwise() - s.x_mean.transpose()).array().square().colwise().sum() / n).sqrt().transpose();
  for (Eigen::Index k = 0; k < s.x_scale.size(); ++k)
    if (!(s.x_scale(k) > 0.0)) s.x_scale(k) = 1.0;
  s.y_mean = t.mean();
  s.y_scale = std::sqrt((t.array() - s.y_mean).square().sum() / n);
  if (!(s.y_scale > 0.0)) s.y_scale = 1.0;
  s.x = ((x.rowwise() - s.x_mean.transpose()).array().rowwise() / s.x_scale.transpose().array()).matrix();
  s.t = ((t.array() - s.y_mean) / s.y_scale).matrix();
  return s;
}

}  // namespace detail

using detail::json;

double matern52(std::span<const double> x, std::span<const double> y, std::span<const double> theta) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double z = (x[i] - y[i]) / theta[i];
    d2 += z * z;
  }
  return matern52_from_sq(d2);
}

LooPoint loo_refit(const Eigen::MatrixXd& x, const Eigen::VectorXd& t, std::span<const double> theta,
                   std::size_t leave_out, double nugget) {
  const auto n = x.rows();
  if (n < 3) throw ConfigError("loo_refit requires at least 3 samples");
  if (static_cast<Eigen::Index>(leave_out) >= n) throw ConfigError("loo_refit: index out of range");
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < n; ++i)
    if (i != static_cast<Eigen::Index>(leave_out)) keep.push_back(i);
  const Eigen::MatrixXd xr = x(keep, Eigen::all);
  const Eigen::VectorXd tr = t(keep);
  Eigen::MatrixXd r = detail::correlation(xr, xr, theta);
  r.diagonal().array() += nugget;
  Eigen::LLT<Eigen::MatrixXd> llt(r);
  if (llt.info() != Eigen::Success) throw NumericalError("loo_refit: reduced correlation matrix is singular");
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n - 1);
  const Eigen::VectorXd rinv1 = llt.solve(ones);
  const double q = ones.dot(rinv1);
  const double beta = rinv1.dot(tr) / q;
  const Eigen::VectorXd r0 = detail::correlation(x.row(static_cast<Eigen::Index>(leave_out)), xr, theta).transpose();
  const Eigen::VectorXd rinv_r0 = llt.solve(r0);
  const double u = 1.0 - ones.dot(rinv_r0);
  LooPoint p;
  p.mean = beta + rinv_r0.dot((tr.array() - beta).matrix());
  p.normalized_variance = 1.0 - r0.dot(rinv_r0) + u * u / q;
  return p;
}

LooAll loo_all(const Eigen::MatrixXd& x, const Eigen::VectorXd& t, std::span<const double> theta, double nugget) {
  if (x.rows() < 2) throw ConfigError("loo_all requires at least 2 samples");
  Eigen::MatrixXd r = detail::correlation(x, x, theta);
  r.diagonal().array() += nugget;
  Eigen::LLT<Eigen::MatrixXd> llt(r);
  if (llt.info() != Eigen::Success) throw NumericalError("loo_all: correlation matrix is not positive definite");
  return detail::loo_from_factor(llt, t, nugget);
}

double loo_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& t, std::span<const double> theta, double nugget,
                     double max_nugget) {
  const auto s = detail::standardize(x, t);
  return detail::objective(s, theta, nugget, max_nugget);
}

namespace detail {

double objective(const Standardized& s, std::span<const double> theta, double nugget, double max_nugget) {
  const Eigen::MatrixXd r = correlation(s.x, s.x, theta);
  Eigen::LLT<Eigen::MatrixXd> llt;
  double used = 0.0;
  if (!factorize_with_nugget(r, nugget, max_nugget, llt, used)) return std::numeric_limits<double>::infinity();
  const double sse = loo_from_factor(llt, s.t, used).sse;
  return std::isfinite(sse) ? sse : std::numeric_limits<double>::infinity();
}

}  // namespace detail

KrigingModel KrigingModel::build(const Eigen::MatrixXd& x, const Eigen::VectorXd& t, std::span<const double> theta,
                                 double nugget, double max_nugget) {
  if (x.rows() != t.size()) throw ConfigError("Kriging: input and output sizes differ");
  if (x.rows() < 2) throw ConfigError("Kriging: at least 2 training samples required");
  if (theta.size() != static_cast<std::size_t>(x.cols())) throw ConfigError("Kriging: theta dimension mismatch");
  for (double th : theta)
    if (!(th > 0.0 && std::isfinite(th))) throw ConfigError("Kriging: theta must be positive");
  if (!x.allFinite() || !t.allFinite()) throw ConfigError("Kriging: training data must be finite");

  const auto s = detail::standardize(x, t);
  KrigingModel m;
  m.x_raw_ = x;
  m.t_raw_ = t;
  m.x_mean_ = s.x_mean;
  m.x_scale_ = s.x_scale;
  m.y_mean_ = s.y_mean;
  m.y_scale_ = s.y_scale;
  m.xs_ = s.x;
  m.ys_ = s.t;
  m.theta_.assign(theta.begin(), theta.end());

  const Eigen::MatrixXd r = detail::correlation(m.xs_, m.xs_, theta);
  if (!detail::factorize_with_nugget(r, nugget, max_nugget, m.llt_, m.nugget_))
    throw NumericalError("Kriging: correlation matrix not positive definite up to nugget " + std::to_string(max_nugget));

  const auto loo = detail::loo_from_factor(m.llt_, m.ys_, m.nugget_);
  m.loo_sse_ = loo.sse;
  const Eigen::ArrayXd e = m.ys_.array() - loo.mean.array();
  m.sigma2_ = (e.square() / loo.normalized_variance.array()).mean();
  m.sigma2_ = std::max(m.sigma2_, detail::kMinProcessVariance);
  m.factorize(true);
  return m;
}

void KrigingModel::factorize(bool estimate_beta) {
  const auto n = xs_.rows();
  if (llt_.rows() != n) {
    Eigen::MatrixXd r = detail::correlation(xs_, xs_, theta_);
    r.diagonal().array() += nugget_;
    llt_.compute(r);
    if (llt_.info() != Eigen::Success) throw NumericalError("Kriging: stored nugget no longer factorizes R");
  }
  ones_w_ = llt_.matrixL().solve(Eigen::VectorXd::Ones(n));
  q_ = ones_w_.squaredNorm();
  if (estimate_beta) beta_ = ones_w_.dot(llt_.matrixL().solve(ys_)) / q_;
  alpha_ = llt_.solve((ys_.array() - beta_).matrix());
}

Prediction KrigingModel::predict(const Eigen::MatrixXd& x) const {
  if (static_cast<std::size_t>(x.cols()) != dimension()) throw ConfigError("Kriging: prediction dimension mismatch");
  constexpr Eigen::Index kBlock = 1024;
  const auto n = x.rows();
  Prediction p;
  p.mean.resize(n);
  p.variance.resize(n);
  for (Eigen::Index start = 0; start < n; start += kBlock) {
    const auto b = std::min(kBlock, n - start);
    const Eigen::MatrixXd xb =
        ((x.middleRows(start, b).rowwise() - x_mean_.transpose()).array().rowwise() / x_scale_.transpose().array())
            .matrix();
    Eigen::MatrixXd w = detail::correlation(xs_, xb, theta_);  // N x b
    p.mean.segment(start, b) = ((w.transpose() * alpha_).array() + beta_).matrix() * y_scale_;
    p.mean.segment(start, b).array() += y_mean_;
    std::vector<std::pair<Eigen::Index, Eigen::Index>> at_training;  // (column, training row)
    for (Eigen::Index j = 0; j < b; ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i)
        if (w(i, j) == 1.0) {
          at_training.emplace_back(j, i);
          break;
        }
    llt_.matrixL().solveInPlace(w);
    const Eigen::ArrayXd u = 1.0 - (w.transpose() * ones_w_).array();
    Eigen::ArrayXd v = 1.0 - w.colwise().squaredNorm().transpose().array() + u.square() / q_;
    // The nugget is part of the correlation at coincident inputs, so at a
    // training input w is a column of R + nugget I: the mean is the training
    // output and the variance is zero.
    for (const auto& [j, i] : at_training) {
      p.mean(start + j) = ys_(i) * y_scale_ + y_mean_;
      v(j) = 0.0;
    }
    p.variance.segment(start, b) = (v.max(0.0) * sigma2_ * y_scale_ * y_scale_).matrix();
  }
  return p;
}

double KrigingModel::predict_mean(std::span<const double> x0) const {
  const Eigen::Map<const Eigen::RowVectorXd> row(x0.data(), static_cast<Eigen::Index>(x0.size()));
  return predict(Eigen::MatrixXd(row)).mean(0);
}

double KrigingModel::predict_variance(std::span<const double> x0) const {
  const Eigen::Map<const Eigen::RowVectorXd> row(x0.data(), static_cast<Eigen::Index>(x0.size()));
  return predict(Eigen::MatrixXd(row)).variance(0);
}

bool operator==(const KrigingModel& a, const KrigingModel& b) {
  return a.x_raw_ == b.x_raw_ && a.t_raw_ == b.t_raw_ && a.x_mean_ == b.x_mean_ && a.x_scale_ == b.x_scale_ &&
         a.y_mean_ == b.y_mean_ && a.y_scale_ == b.y_scale_ && a.theta_ == b.theta_ && a.nugget_ == b.nugget_ &&
         a.sigma2_ == b.sigma2_ && a.beta_ == b.beta_ && a.loo_sse_ == b.loo_sse_;
}

std::string KrigingModel::to_json() const {
  json j;
  j["schema"] = "alk.kriging/1";
  j["theta"] = theta_;
  j["nugget"] = nugget_;
  j["process_variance"] = process_variance();
  j["beta"] = beta();
  j["standardized"] = {{"process_variance", sigma2_}, {"beta", beta_}, {"loo_sse", loo_sse_}};
  j["input_mean"] = std::vector<double>(x_mean_.begin(), x_mean_.end());
  j["input_scale"] = std::vector<double>(x_scale_.begin(), x_scale_.end());
  j["output_mean"] = y_mean_;
  j["output_scale"] = y_scale_;
  json xs = json::array();
  for (Eigen::Index i = 0; i < x_raw_.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(x_raw_.cols()));
    for (Eigen::Index k = 0; k < x_raw_.cols(); ++k) row[static_cast<std::size_t>(k)] = x_raw_(i, k);
    xs.push_back(row);
  }
  j["inputs"] = xs;
  j["outputs"] = std::vector<double>(t_raw_.begin(), t_raw_.end());
  return j.dump(1) + "\n";
}

KrigingModel KrigingModel::from_json(const std::string& text) {
  using detail::required;
  using detail::required_array;
  const json j = detail::parse_json(text, "Kriging model");
  if (!j.is_object() || j.value("schema", "") != "alk.kriging/1")
    throw ConfigError("field 'schema': expected 'alk.kriging/1'");
  KrigingModel m;
  auto vec = [&](const json& arr, const std::string& path) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
    for (std::size_t i = 0; i < arr.size(); ++i)
      v(static_cast<Eigen::Index>(i)) = detail::read_as<double>(arr[i], path + "[" + std::to_string(i) + "]");
    return v;
  };
  const auto theta = vec(required_array(j, "theta", ""), "theta");
  m.theta_.assign(theta.begin(), theta.end());
  m.nugget_ = required<double>(j, "nugget", "");
  const auto& st = detail::required_object(j, "standardized", "");
  m.sigma2_ = required<double>(st, "process_variance", "standardized");
  m.beta_ = required<double>(st, "beta", "standardized");
  m.loo_sse_ = required<double>(st, "loo_sse", "standardized");
  m.x_mean_ = vec(required_array(j, "input_mean", ""), "input_mean");
  m.x_scale_ = vec(required_array(j, "input_scale", ""), "input_scale");
  m.y_mean_ = required<double>(j, "output_mean", "");
  m.y_scale_ = required<double>(j, "output_scale", "");
  const auto& xs = required_array(j, "inputs", "");
  const auto dim = static_cast<Eigen::Index>(m.theta_.size());
  m.x_raw_.resize(static_cast<Eigen::Index>(xs.size()), dim);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto row = vec(xs[i], "inputs[" + std::to_string(i) + "]");
    if (row.size() != dim) throw ConfigError("field 'inputs[" + std::to_string(i) + "]': wrong dimension");
    m.x_raw_.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  m.t_raw_ = vec(required_array(j, "outputs", ""), "outputs");
  if (m.t_raw_.size() != m.x_raw_.rows()) throw ConfigError("field 'outputs': size differs from inputs");
  if (m.x_mean_.size() != dim || m.x_scale_.size() != dim) throw ConfigError("standardization dimension mismatch");
  m.xs_ = ((m.x_raw_.rowwise() - m.x_mean_.transpose()).array().rowwise() / m.x_scale_.transpose().array()).matrix();
  m.ys_ = ((m.t_raw_.array() - m.y_mean_) / m.y_scale_).matrix();
  m.factorize(false);
  return m;
}

}  // namespace alk
