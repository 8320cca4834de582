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

#include "alk/evaluation.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "alk/error.hpp"
#include "alk/rng.hpp"
#include "json_util.hpp"

namespace alk {

using detail::json;

namespace {

std::string fmt(double v) {
  if (!std::isfinite(v)) return {};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Confusion confusion(std::span<const double> pred, std::span<const std::uint8_t> truth) {
  if (pred.size() != truth.size())
    throw ConfigError("confusion: " + std::to_string(pred.size()) + " predictions vs " + std::to_string(truth.size()) +
                      " labels");
  Confusion c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] < 0.0;
    const bool t = truth[i] != 0;
    if (p && t) ++c.tp;
    else if (p) ++c.fp;
    else if (t) ++c.fn;
    else ++c.tn;
  }
  c.tpr_undefined = c.tp + c.fn == 0;
  c.fdr_undefined = c.tp + c.fp == 0;
  c.tpr = c.tpr_undefined ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  c.fdr = c.fdr_undefined ? 0.0 : static_cast<double>(c.fp) / static_cast<double>(c.tp + c.fp);
  return c;
}

double cov_pf(double pf, std::size_t n) {
  if (!(pf > 0.0 && pf < 1.0)) throw ConfigError("cov_pf: probability must lie strictly between 0 and 1");
  if (n == 0) throw ConfigError("cov_pf: sample count must be positive");
  return std::sqrt((1.0 - pf) / (static_cast<double>(n) * pf));
}

std::string to_string(FailurePolicy p) { return p == FailurePolicy::Error ? "error" : "unstable"; }

FailurePolicy failure_policy_from_string(const std::string& s) {
  if (s == "error") return FailurePolicy::Error;
  if (s == "unstable") return FailurePolicy::Unstable;
  throw ConfigError("unknown failure policy '" + s + "' (expected 'error' or 'unstable')");
}

McsResult direct_mcs(const Evaluator& evaluator, const Eigen::MatrixXd& pool, std::size_t workers,
                     FailurePolicy policy) {
  if (pool.rows() == 0) throw ConfigError("direct_mcs: empty pool");
  if (static_cast<std::size_t>(pool.cols()) != evaluator.dimension())
    throw ConfigError("direct_mcs: pool dimension differs from the evaluator");
  const auto ev = evaluate_rows(evaluator, pool, workers);
  McsResult r;
  r.seconds = ev.seconds;
  r.margins = ev.margins;
  r.labels.resize(ev.margins.size());
  std::size_t unstable = 0;
  for (std::size_t i = 0; i < ev.margins.size(); ++i) {
    if (!ev.ok[i]) {
      if (policy == FailurePolicy::Error)
        throw EvaluationError("reference sample " + std::to_string(i) + ": " + ev.errors[i]);
      ++r.failures;
    }
    r.labels[i] = (!ev.ok[i] || ev.margins[i] < 0.0) ? 1 : 0;
    unstable += r.labels[i];
  }
  r.pf_ref = static_cast<double>(unstable) / static_cast<double>(r.labels.size());
  return r;
}

std::string McsResult::labels_csv() const {
  std::string out = "index,margin,unstable\n";
  for (std::size_t i = 0; i < labels.size(); ++i)
    out += std::to_string(i) + "," + fmt(margins[i]) + "," + (labels[i] ? "1" : "0") + "\n";
  return out;
}

McsResult McsResult::from_labels_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "index,margin,unstable")
    throw ConfigError("labels CSV: expected header 'index,margin,unstable'");
  McsResult r;
  std::size_t unstable = 0;
  for (std::size_t row = 1; std::getline(in, line); ++row) {
    if (line.empty()) continue;
    const auto a = line.find(',');
    const auto b = line.find(',', a == std::string::npos ? a : a + 1);
    if (a == std::string::npos || b == std::string::npos)
      throw ConfigError("labels CSV line " + std::to_string(row + 1) + ": expected 3 fields");
    const auto m = line.substr(a + 1, b - a - 1);
    const auto l = line.substr(b + 1);
    if (l != "0" && l != "1") throw ConfigError("labels CSV line " + std::to_string(row + 1) + ": label must be 0 or 1");
    double v = std::numeric_limits<double>::quiet_NaN();
    if (!m.empty()) {
      try {
        std::size_t used = 0;
        v = std::stod(m, &used);
        if (used != m.size()) throw std::invalid_argument(m);
      } catch (const std::exception&) {
        throw ConfigError("labels CSV line " + std::to_string(row + 1) + ": bad margin '" + m + "'");
      }
    } else {
      ++r.failures;
    }
    r.margins.push_back(v);
    r.labels.push_back(l == "1" ? 1 : 0);
    unstable += r.labels.back();
  }
  r.pf_ref = r.labels.empty() ? 0.0 : static_cast<double>(unstable) / static_cast<double>(r.labels.size());
  return r;
}

void attach_reference(PfReport& report, std::span<const double> predicted, const McsResult& reference) {
  report.pf_ref = reference.pf_ref;
  report.metrics = confusion(predicted, reference.labels);
  report.n_reference = reference.evaluations();
}

PfReport report_from_al(const std::string& experiment, const ALResult& al, const ALConfig& cfg) {
  PfReport r;
  r.experiment = experiment;
  r.method = "al-kriging";
  r.pf_hat = al.pf_hat;
  r.n_v = static_cast<std::size_t>(al.pool.rows());
  r.n_total = al.state.evaluations;
  r.n_initial = cfg.initial_size;
  r.l_total = al.state.iteration;
  r.failures = al.state.failures.size();
  r.stop_reason = to_string(al.state.stop);
  r.theta = al.model.theta();
  r.pf_history = al.state.pf_history;
  r.timing = al.timing;
  return r;
}

BaselineResult baseline_kriging(const std::string& experiment, const UncertaintySpec& spec, const Evaluator& evaluator,
                                std::size_t n_c, FitConfig fit_cfg, const Eigen::MatrixXd& pool, std::size_t workers) {
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  spec.validate();
  const auto dim = spec.dimension();
  if (n_c < dim + 1) throw ConfigError("baseline size must be at least dimension + 1 = " + std::to_string(dim + 1));
  if (static_cast<std::size_t>(pool.cols()) != dim) throw ConfigError("baseline: pool dimension mismatch");
  const auto design = lhs_sample(spec, n_c).values;
  const auto ev = evaluate_rows(evaluator, design, workers);
  std::vector<Eigen::Index> ok;
  for (std::size_t i = 0; i < ev.ok.size(); ++i)
    if (ev.ok[i]) ok.push_back(static_cast<Eigen::Index>(i));
  Eigen::VectorXd t(static_cast<Eigen::Index>(ok.size()));
  for (std::size_t i = 0; i < ok.size(); ++i) t(static_cast<Eigen::Index>(i)) = ev.margins[static_cast<std::size_t>(ok[i])];
  const Eigen::MatrixXd x = design(ok, Eigen::all);

  const auto t_sg = Clock::now();
  BaselineResult out;
  out.model = fit(x, t, fit_cfg).model;
  out.pool_mean = predict_parallel(out.model, pool, workers).mean;
  const double sg = std::chrono::duration<double>(Clock::now() - t_sg).count();

  auto& r = out.report;
  r.experiment = experiment;
  r.method = "baseline-kriging";
  r.pf_hat = estimate_pf({out.pool_mean.data(), static_cast<std::size_t>(out.pool_mean.size())});
  r.n_v = static_cast<std::size_t>(pool.rows());
  r.n_total = n_c;
  r.n_initial = n_c;
  r.l_total = 1;
  r.failures = n_c - ok.size();
  r.stop_reason = "one-shot";
  r.theta = out.model.theta();
  r.pf_history = {r.pf_hat};
  r.timing = {ev.seconds, sg, std::chrono::duration<double>(Clock::now() - t0).count()};
  return out;
}

// ---------------------------------------------------------------------------
// Report serialization

std::string PfReport::to_json() const {
  json j;
  j["schema"] = "alk.report/1";
  j["experiment"] = experiment;
  j["method"] = method;
  j["pf_hat"] = pf_hat;
  j["pf_ref"] = pf_ref ? json(*pf_ref) : json(nullptr);
  if (metrics) {
    j["confusion"] = {{"tp", metrics->tp},
                      {"fp", metrics->fp},
                      {"fn", metrics->fn},
                      {"tn", metrics->tn},
                      {"tpr", metrics->tpr},
                      {"fdr", metrics->fdr},
                      {"tpr_undefined", metrics->tpr_undefined},
                      {"fdr_undefined", metrics->fdr_undefined}};
  } else {
    j["confusion"] = nullptr;
  }
  j["n_v"] = n_v;
  j["n_total"] = n_total;
  j["n_initial"] = n_initial;
  j["l_total"] = l_total;
  j["n_reference"] = n_reference;
  j["failures"] = failures;
  j["stop_reason"] = stop_reason;
  j["theta"] = theta;
  j["pf_history"] = pf_history;
  return j.dump(1) + "\n";
}

PfReport PfReport::from_json(const std::string& text) {
  using detail::optional;
  using detail::required;
  const json j = detail::parse_json(text, "report");
  if (!j.is_object() || j.value("schema", "") != "alk.report/1")
    throw ConfigError("field 'schema': expected 'alk.report/1'");
  PfReport r;
  r.experiment = required<std::string>(j, "experiment", "");
  r.method = required<std::string>(j, "method", "");
  r.pf_hat = required<double>(j, "pf_hat", "");
  if (j.contains("pf_ref") && !j["pf_ref"].is_null()) r.pf_ref = required<double>(j, "pf_ref", "");
  if (j.contains("confusion") && !j["confusion"].is_null()) {
    const auto& c = j["confusion"];
    Confusion m;
    m.tp = required<std::size_t>(c, "tp", "confusion");
    m.fp = required<std::size_t>(c, "fp", "confusion");
    m.fn = required<std::size_t>(c, "fn", "confusion");
    m.tn = required<std::size_t>(c, "tn", "confusion");
    m.tpr = required<double>(c, "tpr", "confusion");
    m.fdr = required<double>(c, "fdr", "confusion");
    m.tpr_undefined = required<bool>(c, "tpr_undefined", "confusion");
    m.fdr_undefined = required<bool>(c, "fdr_undefined", "confusion");
    r.metrics = m;
  }
  r.n_v = required<std::size_t>(j, "n_v", "");
  r.n_total = required<std::size_t>(j, "n_total", "");
  r.n_initial = required<std::size_t>(j, "n_initial", "");
  r.l_total = required<std::size_t>(j, "l_total", "");
  r.n_reference = required<std::size_t>(j, "n_reference", "");
  r.failures = required<std::size_t>(j, "failures", "");
  r.stop_reason = required<std::string>(j, "stop_reason", "");
  r.theta = j.at("theta").get<std::vector<double>>();
  r.pf_history = j.at("pf_history").get<std::vector<double>>();
  return r;
}

std::string PfReport::csv_header() {
  return "experiment,method,pf_hat,pf_ref,tp,fp,fn,tn,tpr,fdr,n_v,n_total,l_total,n_reference,stop_reason,t_ed,t_sg,"
         "t_total";
}

std::string PfReport::csv_row() const {
  std::string s = experiment + "," + method + "," + fmt(pf_hat) + "," + (pf_ref ? fmt(*pf_ref) : std::string());
  if (metrics) {
    s += "," + std::to_string(metrics->tp) + "," + std::to_string(metrics->fp) + "," + std::to_string(metrics->fn) + "," +
         std::to_string(metrics->tn) + "," + fmt(metrics->tpr) + "," + fmt(metrics->fdr);
  } else {
    s += ",,,,,,";
  }
  s += "," + std::to_string(n_v) + "," + std::to_string(n_total) + "," + std::to_string(l_total) + "," +
       std::to_string(n_reference) + "," + stop_reason + "," + fmt(timing.evaluator) + "," + fmt(timing.surrogate) +
       "," + fmt(timing.total);
  return s;
}

}  // namespace alk
