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
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "alk/active_learning.hpp"
#include "alk/evaluation.hpp"
#include "alk/kriging.hpp"
#include "alk/powersim.hpp"
#include "alk/sampling.hpp"

namespace alk {

struct AnalyticChoice {
  std::string name;
  AnalyticParams params;
};

struct GridChoice {
  std::string grid;  // "builtin:<name>" or a path, relative to the config file
  std::string contingency;
  std::optional<double> t_fct;  // seconds; overrides the contingency's clearing time
  CctSearch search;
};

struct BaselineSettings {
  bool enabled = false;
  std::size_t size = 500;  // N_c
};

struct ReferenceSettings {
  bool enabled = true;
  // Reference pool size; 0 uses the selection pool. A larger reference pool
  // extends the selection pool, whose rows are its prefix.
  std::size_t pool_size = 0;
  FailurePolicy failure_policy = FailurePolicy::Error;
};

/// Experiment description, read from JSON (schema_version 1).
///
/// Random streams derive from `seed` as sub_seed(seed, name) with names
/// "initial" (LHS design), "pool" (selection and reference pool), "fit"
/// (optimizer, mixed with the iteration number) and "baseline" /
/// "baseline-fit" for the one-shot comparison.
struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t seed = 0;
  std::optional<AnalyticChoice> analytic;
  std::optional<GridChoice> grid;
  std::optional<UncertaintySpec> uncertainty;  // defaults: analytic inputs or the grid case's own
  ALConfig al;
  FitConfig fit;
  BaselineSettings baseline;
  ReferenceSettings reference;
  std::string output_dir = "out";
  std::size_t workers = 0;  // 0 = all cores
  std::filesystem::path base_dir;  // resolves relative paths; not serialized

  static ExperimentConfig from_json(const std::string& text, const std::filesystem::path& base_dir = {});
  static ExperimentConfig load(const std::filesystem::path& path);
  std::string to_json() const;
  friend bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) { return a.to_json() == b.to_json(); }
};

/// Resolved evaluator and input model of a config.
struct Experiment {
  UncertaintySpec spec;
  std::shared_ptr<const Evaluator> evaluator;
  std::optional<double> closed_form_pf;
  std::optional<double> analytic_reference_pf;
};

Experiment resolve(const ExperimentConfig& cfg);

/// Selection pool (N_V rows) and reference pool (max(N_V, reference size)
/// rows) from the "pool" stream; the former is a prefix of the latter.
Eigen::MatrixXd reference_pool(const ExperimentConfig& cfg, const UncertaintySpec& spec);

struct RunOptions {
  bool write_files = true;
  std::function<void(const std::string&)> log;  // progress lines
  const McsResult* reference = nullptr;         // reuse labels of the same reference pool
};

struct RunOutcome {
  PfReport report;
  std::optional<PfReport> baseline;
  ALResult al;
  std::optional<McsResult> reference;
};

/// run_al, reference labels, optional baseline, and artifacts in `out`:
/// report.json, report.csv, state.json, model.json, progress.jsonl,
/// predictions.csv, labels.csv, timing.json and, with a baseline,
/// baseline.json and comparison.csv.
RunOutcome run_al_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out, const RunOptions& opt = {});

struct McsOutcome {
  McsResult result;
  std::size_t n = 0;
  double cov = 0.0;  // NaN when pf_ref is 0 or 1
};

/// Direct Monte Carlo on the reference pool; writes mcs.json and labels.csv.
McsOutcome run_mcs_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out, bool write_files = true);

enum class SweepParameter { PoolSize, BatchSize, IterationCap };
SweepParameter sweep_parameter_from_string(const std::string& s);
std::string to_string(SweepParameter p);

struct SweepRow {
  std::string parameter;
  std::size_t value = 0;
  PfReport report;
};

/// One AL run per value with the same seeds; writes sweep.csv with columns
/// parameter,value,pf_hat,pf_ref,tpr,fdr,n_total,l_total,t_total.
std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, SweepParameter param, const std::vector<std::size_t>& values,
                                const std::filesystem::path& out, const RunOptions& opt = {});
std::string sweep_csv(const std::vector<SweepRow>& rows);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace alk
