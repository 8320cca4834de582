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
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "alk/active_learning.hpp"
#include "alk/kriging.hpp"
#include "alk/sampling.hpp"

namespace alk {

/// Unstable (margin < 0) is the positive class.
struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double tpr = 0.0;
  double fdr = 0.0;
  bool tpr_undefined = false;  // no actual positives; tpr reported as 0
  bool fdr_undefined = false;  // no predicted positives; fdr reported as 0

  std::size_t total() const { return tp + fp + fn + tn; }
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

/// `truth[i]` is 1 for an unstable reference label.
Confusion confusion(std::span<const double> predicted_margins, std::span<const std::uint8_t> truth);

/// Binomial c.o.v. of a Monte Carlo estimate, sqrt((1 - p) / (N p)).
double cov_pf(double pf, std::size_t n);

enum class FailurePolicy { Error, Unstable };
std::string to_string(FailurePolicy p);
FailurePolicy failure_policy_from_string(const std::string& s);

struct McsResult {
  std::vector<std::uint8_t> labels;  // 1 = unstable
  std::vector<double> margins;       // NaN where the evaluation failed
  std::size_t failures = 0;
  double pf_ref = 0.0;
  double seconds = 0.0;

  std::size_t evaluations() const { return labels.size(); }
  /// CSV with header "index,margin,unstable".
  std::string labels_csv() const;
  static McsResult from_labels_csv(const std::string& text);
};

/// Evaluates every pool row. With FailurePolicy::Error the first failure
/// (lowest index) is rethrown; with Unstable, failed samples count as unstable.
McsResult direct_mcs(const Evaluator& evaluator, const Eigen::MatrixXd& pool, std::size_t workers,
                     FailurePolicy policy = FailurePolicy::Error);

struct PfReport {
  std::string experiment;
  std::string method;  // "al-kriging" or "baseline-kriging"
  double pf_hat = 0.0;
  std::optional<double> pf_ref;
  std::optional<Confusion> metrics;
  std::size_t n_v = 0;
  std::size_t n_total = 0;      // evaluator calls spent by the method
  std::size_t n_initial = 0;
  std::size_t l_total = 0;      // surrogate iterations (1 for the baseline)
  std::size_t n_reference = 0;  // evaluator calls spent on the reference labels
  std::size_t failures = 0;
  std::string stop_reason;
  std::vector<double> theta;
  std::vector<double> pf_history;
  ALTiming timing;

  /// Deterministic JSON; wall times are excluded.
  std::string to_json() const;
  static PfReport from_json(const std::string& text);
  static std::string csv_header();
  std::string csv_row() const;  // includes t_ed, t_sg, t_total
  /// Compares every serialized field; timings are ignored.
  friend bool operator==(const PfReport& a, const PfReport& b) { return a.to_json() == b.to_json(); }
};

/// Fills pf_ref and metrics from reference labels on the same pool.
void attach_reference(PfReport& report, std::span<const double> predicted_margins, const McsResult& reference);

PfReport report_from_al(const std::string& experiment, const ALResult& al, const ALConfig& cfg);

struct BaselineResult {
  PfReport report;
  KrigingModel model;
  Eigen::VectorXd pool_mean;
};

/// One-shot LHS design of size n_c, a single fit, and pool prediction.
BaselineResult baseline_kriging(const std::string& experiment, const UncertaintySpec& spec,
                                const Evaluator& evaluator, std::size_t n_c, FitConfig fit_cfg,
                                const Eigen::MatrixXd& pool, std::size_t workers);

struct AnalyticLimitState {
  std::string name;
  std::size_t dimension = 0;
  std::shared_ptr<const Evaluator> evaluator;
  double reference_pf = 0.0;
  std::string provenance;
  std::uint64_t reference_seed = 0;       // brute-force run, when no closed form
  std::size_t reference_samples = 0;
  std::optional<double> closed_form;

  /// Independent standard-normal inputs x1..xM.
  UncertaintySpec uncertainty() const;
};

/// Parameters of the configurable analytic cases. Unused fields are ignored.
struct AnalyticParams {
  std::size_t dimension = 0;  // 0 = the case default
  double pf = 0.0;            // 0 = the case default (linear and hypersphere)
};

AnalyticLimitState make_analytic(const std::string& name, const AnalyticParams& params = {});
std::vector<AnalyticLimitState> analytic_suite();

/// Plain Monte Carlo of an analytic case, used to produce and check the
/// stored references.
double brute_force_pf(const AnalyticLimitState& a, std::size_t n, std::uint64_t seed);

}  // namespace alk
