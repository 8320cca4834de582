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
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "alk/kriging.hpp"
#include "alk/powersim.hpp"
#include "alk/sampling.hpp"

namespace alk {

/// Expensive limit-state function x -> margin (negative = unstable).
/// Implementations must be deterministic and safe to call concurrently.
/// Samples that cannot be evaluated raise EvaluationError.
class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual std::size_t dimension() const = 0;
  virtual double margin(std::span<const double> x) const = 0;
};

class FunctionEvaluator final : public Evaluator {
 public:
  using Fn = std::function<double(std::span<const double>)>;
  FunctionEvaluator(std::size_t dimension, Fn fn) : dim_(dimension), fn_(std::move(fn)) {}
  std::size_t dimension() const override { return dim_; }
  double margin(std::span<const double> x) const override { return fn_(x); }

 private:
  std::size_t dim_;
  Fn fn_;
};

/// Transient stability margin T_cct - T_fct of one contingency, in seconds.
class GridEvaluator final : public Evaluator {
 public:
  GridEvaluator(GridCase grid, Contingency ctg, CctSearch search = {}, SimulationOptions sim = {});
  std::size_t dimension() const override { return grid_.input_dimension(); }
  double margin(std::span<const double> x) const override;
  const GridCase& grid() const { return grid_; }
  const Contingency& contingency() const { return ctg_; }

 private:
  GridCase grid_;
  Contingency ctg_;
  CctSearch search_;
  SimulationOptions sim_;
};

struct ALConfig {
  std::size_t n_e = 10;
  std::size_t l_max = 40;
  double eps_s = 0.02;
  std::size_t l_ck = 5;
  std::size_t pool_size = 100000;   // N_V
  std::size_t initial_size = 50;    // N_0
  std::uint64_t seed = 0;
  std::size_t workers = 1;

  void validate(std::size_t dimension) const;
};

enum class StopReason { None, CriterionMet, IterationCap, EvaluatorExhausted };
std::string to_string(StopReason r);
StopReason stop_reason_from_string(const std::string& s);

/// One completed iteration of the loop.
struct IterationRecord {
  std::size_t iteration = 0;
  std::size_t n_train = 0;
  double pf_hat = 0.0;
  double min_u = 0.0;  // over pool samples not yet enriched
  std::vector<double> theta;
  double loo_objective = 0.0;
  // Enrichment chosen at the end of this iteration (empty at a stop).
  std::vector<std::size_t> selected;
  std::vector<double> u_values;
  std::vector<double> predicted;  // mu at the selected samples
  std::vector<double> margins;    // evaluated; NaN where the evaluation failed

  friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

struct FailedEvaluation {
  long pool_index = -1;  // -1 for the initial design
  std::vector<double> x;
  std::string message;

  friend bool operator==(const FailedEvaluation&, const FailedEvaluation&) = default;
};

struct ALState {
  std::size_t iteration = 0;  // completed iterations
  Eigen::MatrixXd x;          // training inputs
  Eigen::VectorXd t;          // training margins
  std::vector<long> origin;   // pool index per training row, -1 for the initial design
  std::vector<double> pf_history;
  std::vector<IterationRecord> log;
  std::vector<FailedEvaluation> failures;
  std::size_t evaluations = 0;  // evaluator calls, including failures
  StopReason stop = StopReason::None;

  std::size_t enrichment_iterations() const;
  std::string to_json() const;
  static ALState from_json(const std::string& text);
  friend bool operator==(const ALState& a, const ALState& b);
};

struct ALTiming {
  double evaluator = 0.0;  // t_ed
  double surrogate = 0.0;  // t_sg: fitting and pool prediction
  double total = 0.0;
};

struct ALResult {
  KrigingModel model;
  ALState state;
  Eigen::MatrixXd pool;
  Eigen::VectorXd pool_mean;
  Eigen::VectorXd pool_variance;
  double pf_hat = 0.0;
  ALTiming timing;
};

struct ALHooks {
  // Called after each iteration's enrichment (or stop), with wall seconds so far.
  std::function<void(const IterationRecord&, const ALState&, double)> on_iteration;
  // Called with the partial state before a fit or evaluator error propagates.
  std::function<void(const ALState&)> on_abort;
};

/// |mu| / sigma; +inf where sigma = 0.
double u_value(double mu, double sigma);

/// Up to n_e indices with the smallest U, skipping `excluded` and infinite U,
/// ties by lowest index.
std::vector<std::size_t> select_enrichment(std::span<const double> u, const std::vector<bool>& excluded,
                                           std::size_t n_e);

/// Fraction of strictly negative predicted margins.
double estimate_pf(std::span<const double> margins);

/// True iff the last l_ck entries satisfy (max - min) / min <= eps_s with min > 0.
bool check_stop(std::span<const double> history, double eps_s, std::size_t l_ck);

/// Seeds of the driver's random streams, derived from cfg.seed.
struct ALSeeds {
  std::uint64_t initial, pool, fit;
  static ALSeeds from(std::uint64_t root);
};

/// The active-learning loop. `pool` overrides the generated selection pool
/// (its row count then replaces cfg.pool_size).
ALResult run_al(const UncertaintySpec& spec, const Evaluator& evaluator, const ALConfig& cfg, FitConfig fit_cfg,
                const Eigen::MatrixXd* pool = nullptr, const ALHooks& hooks = {});

/// Evaluates every row, in parallel; failures are reported through `ok`.
struct BatchEvaluation {
  std::vector<double> margins;
  std::vector<bool> ok;
  std::vector<std::string> errors;
  double seconds = 0.0;
};
BatchEvaluation evaluate_rows(const Evaluator& evaluator, const Eigen::MatrixXd& x, std::size_t workers);

/// Batched prediction over many rows, split across workers.
Prediction predict_parallel(const KrigingModel& model, const Eigen::MatrixXd& x, std::size_t workers);

}  // namespace alk
