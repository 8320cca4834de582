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

#include "alk/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "alk/error.hpp"
#include "alk/rng.hpp"
#include "json_util.hpp"

namespace alk {

using detail::json;
using detail::optional;
using detail::required;

namespace {

void reject_unknown(const json& j, const std::string& ctx, std::initializer_list<const char*> known) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return it.key() == k; }))
      throw ConfigError("field '" + detail::join_path(ctx, it.key()) + "': unknown field");
  }
}

const json* object_or_null(const json& j, const char* key, const std::string& ctx) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return nullptr;
  if (!it->is_object()) throw ConfigError("field '" + detail::join_path(ctx, key) + "': expected an object");
  return &*it;
}

std::vector<double> bound_list(const json& j, const char* key, std::vector<double> def, const std::string& ctx) {
  const auto it = j.find(key);
  if (it == j.end()) return def;
  const auto path = detail::join_path(ctx, key);
  if (it->is_number()) return {detail::read_as<double>(*it, path)};
  if (!it->is_array() || it->empty()) throw ConfigError("field '" + path + "': expected a number or a non-empty array");
  std::vector<double> v;
  for (std::size_t i = 0; i < it->size(); ++i)
    v.push_back(detail::read_as<double>((*it)[i], path + "[" + std::to_string(i) + "]"));
  return v;
}

std::string fmt(double v) {
  if (!std::isfinite(v)) return {};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + path.string() + "'");
  f << text;
  if (!f) throw ConfigError("write failed for '" + path.string() + "'");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read '" + path.string() + "'");
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

// ---------------------------------------------------------------------------
// Config

ExperimentConfig ExperimentConfig::from_json(const std::string& text, const std::filesystem::path& base_dir) {
  const json j = detail::parse_json(text, "experiment config");
  if (!j.is_object()) throw ConfigError("experiment config: expected a JSON object");
  reject_unknown(j, "", {"schema_version", "name", "seed", "evaluator", "uncertainty", "active_learning", "fit",
                         "baseline", "reference", "output_dir", "workers"});
  const auto version = required<int>(j, "schema_version", "");
  if (version != 1) throw ConfigError("field 'schema_version': unsupported version " + std::to_string(version));

  ExperimentConfig c;
  c.base_dir = base_dir;
  c.name = optional<std::string>(j, "name", c.name, "");
  c.seed = optional<std::uint64_t>(j, "seed", 0, "");
  c.output_dir = optional<std::string>(j, "output_dir", c.output_dir, "");
  c.workers = optional<std::size_t>(j, "workers", 0, "");

  const auto& ev = detail::required_object(j, "evaluator", "");
  reject_unknown(ev, "evaluator", {"analytic", "grid"});
  const auto* ja = object_or_null(ev, "analytic", "evaluator");
  const auto* jg = object_or_null(ev, "grid", "evaluator");
  if ((ja != nullptr) == (jg != nullptr))
    throw ConfigError("field 'evaluator': exactly one of 'analytic' or 'grid' must be given");
  if (ja) {
    const std::string ctx = "evaluator.analytic";
    reject_unknown(*ja, ctx, {"name", "dimension", "pf"});
    AnalyticChoice a;
    a.name = required<std::string>(*ja, "name", ctx);
    a.params.dimension = optional<std::size_t>(*ja, "dimension", 0, ctx);
    a.params.pf = optional<double>(*ja, "pf", 0.0, ctx);
    make_analytic(a.name, a.params);
    c.analytic = a;
  } else {
    const std::string ctx = "evaluator.grid";
    reject_unknown(*jg, ctx, {"case", "contingency", "t_fct", "t_fct_cycles", "cct_search"});
    GridChoice g;
    g.grid = required<std::string>(*jg, "case", ctx);
    g.contingency = required<std::string>(*jg, "contingency", ctx);
    if (jg->contains("t_fct") && jg->contains("t_fct_cycles"))
      throw ConfigError("field 'evaluator.grid': give t_fct or t_fct_cycles, not both");
    if (jg->contains("t_fct")) g.t_fct = required<double>(*jg, "t_fct", ctx);
    if (jg->contains("t_fct_cycles")) {
      const auto grid = load_grid_case(g.grid.rfind("builtin:", 0) == 0 || std::filesystem::path(g.grid).is_absolute() ||
                                               base_dir.empty()
                                           ? g.grid
                                           : (base_dir / g.grid).string());
      g.t_fct = grid.cycles_to_seconds(required<double>(*jg, "t_fct_cycles", ctx));
    }
    if (const auto* s = object_or_null(*jg, "cct_search", ctx)) {
      const auto sc = ctx + ".cct_search";
      reject_unknown(*s, sc, {"lo", "hi", "tol"});
      g.search.lo = optional<double>(*s, "lo", g.search.lo, sc);
      g.search.hi = optional<double>(*s, "hi", g.search.hi, sc);
      g.search.tol = optional<double>(*s, "tol", g.search.tol, sc);
    }
    c.grid = g;
  }

  if (const auto* u = object_or_null(j, "uncertainty", ""))
    c.uncertainty = detail::uncertainty_from_json(*u, "uncertainty", base_dir.string());

  if (const auto* a = object_or_null(j, "active_learning", "")) {
    const std::string ctx = "active_learning";
    reject_unknown(*a, ctx, {"n_e", "l_max", "eps_s", "l_ck", "pool_size", "initial_size"});
    c.al.n_e = optional<std::size_t>(*a, "n_e", c.al.n_e, ctx);
    c.al.l_max = optional<std::size_t>(*a, "l_max", c.al.l_max, ctx);
    c.al.eps_s = optional<double>(*a, "eps_s", c.al.eps_s, ctx);
    c.al.l_ck = optional<std::size_t>(*a, "l_ck", c.al.l_ck, ctx);
    c.al.pool_size = optional<std::size_t>(*a, "pool_size", c.al.pool_size, ctx);
    c.al.initial_size = optional<std::size_t>(*a, "initial_size", c.al.initial_size, ctx);
  }
  if (const auto* f = object_or_null(j, "fit", "")) {
    const std::string ctx = "fit";
    reject_unknown(*f, ctx, {"theta_lo", "theta_hi", "population", "generations", "polish_iterations", "nugget",
                             "max_nugget"});
    c.fit.theta_lo = bound_list(*f, "theta_lo", c.fit.theta_lo, ctx);
    c.fit.theta_hi = bound_list(*f, "theta_hi", c.fit.theta_hi, ctx);
    c.fit.population = optional<std::size_t>(*f, "population", c.fit.population, ctx);
    c.fit.generations = optional<std::size_t>(*f, "generations", c.fit.generations, ctx);
    c.fit.polish_iterations = optional<std::size_t>(*f, "polish_iterations", c.fit.polish_iterations, ctx);
    c.fit.nugget = optional<double>(*f, "nugget", c.fit.nugget, ctx);
    c.fit.max_nugget = optional<double>(*f, "max_nugget", c.fit.max_nugget, ctx);
  }
  if (const auto* b = object_or_null(j, "baseline", "")) {
    reject_unknown(*b, "baseline", {"enabled", "size"});
    c.baseline.enabled = optional<bool>(*b, "enabled", c.baseline.enabled, "baseline");
    c.baseline.size = optional<std::size_t>(*b, "size", c.baseline.size, "baseline");
  }
  if (const auto* r = object_or_null(j, "reference", "")) {
    reject_unknown(*r, "reference", {"enabled", "pool_size", "failure_policy"});
    c.reference.enabled = optional<bool>(*r, "enabled", c.reference.enabled, "reference");
    c.reference.pool_size = optional<std::size_t>(*r, "pool_size", 0, "reference");
    const auto pol = optional<std::string>(*r, "failure_policy", "error", "reference");
    try {
      c.reference.failure_policy = failure_policy_from_string(pol);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("field 'reference.failure_policy': ") + e.what());
    }
  }

  const auto e = resolve(c);
  c.al.seed = c.seed;
  c.al.workers = c.workers;
  c.fit.workers = 1;
  try {
    c.al.validate(e.spec.dimension());
  } catch (const ConfigError& err) {
    throw ConfigError(std::string("field 'active_learning': ") + err.what());
  }
  try {
    c.fit.validate(e.spec.dimension());
  } catch (const ConfigError& err) {
    throw ConfigError(std::string("field 'fit': ") + err.what());
  }
  if (c.baseline.enabled && c.baseline.size < e.spec.dimension() + 1)
    throw ConfigError("field 'baseline.size': must be at least dimension + 1");
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file '" + path.string() + "' does not exist");
  return from_json(read_text(path), path.parent_path());
}

std::string ExperimentConfig::to_json() const {
  json j;
  j["schema_version"] = 1;
  j["name"] = name;
  j["seed"] = seed;
  if (analytic) {
    json a = {{"name", analytic->name}};
    if (analytic->params.dimension) a["dimension"] = analytic->params.dimension;
    if (analytic->params.pf != 0.0) a["pf"] = analytic->params.pf;
    j["evaluator"] = {{"analytic", a}};
  } else if (grid) {
    json g = {{"case", grid->grid},
              {"contingency", grid->contingency},
              {"cct_search", {{"lo", grid->search.lo}, {"hi", grid->search.hi}, {"tol", grid->search.tol}}}};
    if (grid->t_fct) g["t_fct"] = *grid->t_fct;
    j["evaluator"] = {{"grid", g}};
  }
  if (uncertainty) j["uncertainty"] = detail::uncertainty_to_json(*uncertainty);
  j["active_learning"] = {{"n_e", al.n_e},           {"l_max", al.l_max},
                          {"eps_s", al.eps_s},       {"l_ck", al.l_ck},
                          {"pool_size", al.pool_size}, {"initial_size", al.initial_size}};
  j["fit"] = {{"theta_lo", fit.theta_lo},
              {"theta_hi", fit.theta_hi},
              {"population", fit.population},
              {"generations", fit.generations},
              {"polish_iterations", fit.polish_iterations},
              {"nugget", fit.nugget},
              {"max_nugget", fit.max_nugget}};
  j["baseline"] = {{"enabled", baseline.enabled}, {"size", baseline.size}};
  j["reference"] = {{"enabled", reference.enabled},
                    {"pool_size", reference.pool_size},
                    {"failure_policy", to_string(reference.failure_policy)}};
  j["output_dir"] = output_dir;
  j["workers"] = workers;
  return j.dump(1) + "\n";
}

Experiment resolve(const ExperimentConfig& cfg) {
  Experiment e;
  if (cfg.analytic) {
    const auto a = make_analytic(cfg.analytic->name, cfg.analytic->params);
    e.evaluator = a.evaluator;
    e.spec = cfg.uncertainty ? *cfg.uncertainty : a.uncertainty();
    e.closed_form_pf = a.closed_form;
    if (!cfg.uncertainty) e.analytic_reference_pf = a.reference_pf;
  } else if (cfg.grid) {
    const auto& g = *cfg.grid;
    std::string ref = g.grid;
    if (ref.rfind("builtin:", 0) != 0 && std::filesystem::path(ref).is_relative() && !cfg.base_dir.empty())
      ref = (cfg.base_dir / ref).string();
    auto grid = load_grid_case(ref);
    auto ctg = grid.contingency(g.contingency);
    if (g.t_fct) ctg.t_fct = *g.t_fct;
    if (cfg.uncertainty) grid.uncertainty = *cfg.uncertainty;
    if (!grid.uncertainty) throw ConfigError("field 'uncertainty': required, the grid case defines none");
    e.spec = *grid.uncertainty;
    try {
      e.evaluator = std::make_shared<GridEvaluator>(grid, ctg, g.search);
    } catch (const ConfigError& err) {
      throw ConfigError(std::string("field 'evaluator.grid': ") + err.what());
    }
  } else {
    throw ConfigError("field 'evaluator': missing");
  }
  e.spec.validate();
  if (e.evaluator->dimension() != e.spec.dimension())
    throw ConfigError("field 'uncertainty': dimension " + std::to_string(e.spec.dimension()) +
                      " does not match the evaluator's " + std::to_string(e.evaluator->dimension()));
  return e;
}

Eigen::MatrixXd reference_pool(const ExperimentConfig& cfg, const UncertaintySpec& spec) {
  UncertaintySpec s = spec;
  s.seed = ALSeeds::from(cfg.seed).pool;
  return mc_sample(s, std::max(cfg.al.pool_size, cfg.reference.pool_size)).values;
}

// ---------------------------------------------------------------------------
// Runs

namespace {

std::string predictions_csv(const Eigen::VectorXd& mean, const Eigen::VectorXd& var) {
  std::string s = "index,mean,variance\n";
  for (Eigen::Index i = 0; i < mean.size(); ++i) s += std::to_string(i) + "," + fmt(mean(i)) + "," + fmt(var(i)) + "\n";
  return s;
}

std::string timing_json(const PfReport& r, const std::optional<PfReport>& b, double reference_seconds) {
  json j = {{"t_ed", r.timing.evaluator},
            {"t_sg", r.timing.surrogate},
            {"t_total", r.timing.total},
            {"t_reference", reference_seconds}};
  if (b) j["baseline"] = {{"t_ed", b->timing.evaluator}, {"t_sg", b->timing.surrogate}, {"t_total", b->timing.total}};
  return j.dump(1) + "\n";
}

}  // namespace

RunOutcome run_al_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out, const RunOptions& opt) {
  const auto exp = resolve(cfg);
  const auto ref_pool = reference_pool(cfg, exp.spec);
  const Eigen::MatrixXd pool = ref_pool.topRows(static_cast<Eigen::Index>(cfg.al.pool_size));

  std::string progress;
  ALHooks hooks;
  hooks.on_iteration = [&](const IterationRecord& r, const ALState& st, double wall) {
    const json line = {{"iteration", r.iteration}, {"n_train", r.n_train},       {"evaluations", st.evaluations},
                       {"pf_hat", r.pf_hat},       {"min_u", detail::number(r.min_u)}, {"wall_seconds", wall}};
    progress += line.dump() + "\n";
    if (opt.log) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "iteration %zu  N=%zu  pf_hat=%.6g  min_U=%.4g  %.1fs", r.iteration, r.n_train,
                    r.pf_hat, r.min_u, wall);
      opt.log(buf);
    }
  };
  hooks.on_abort = [&](const ALState& st) {
    if (!opt.write_files) return;
    write_text(out / "state.json", st.to_json());
    write_text(out / "progress.jsonl", progress);
  };

  FitConfig fit_cfg = cfg.fit;
  ALConfig al_cfg = cfg.al;
  al_cfg.seed = cfg.seed;
  al_cfg.workers = cfg.workers;
  RunOutcome o;
  o.al = run_al(exp.spec, *exp.evaluator, al_cfg, fit_cfg, &pool, hooks);
  o.report = report_from_al(cfg.name, o.al, al_cfg);

  double reference_seconds = 0.0;
  Eigen::VectorXd ref_mean;
  if (cfg.reference.enabled) {
    if (opt.reference && opt.reference->labels.size() == static_cast<std::size_t>(ref_pool.rows())) {
      o.reference = *opt.reference;
    } else {
      if (opt.log) opt.log("reference: direct Monte Carlo on " + std::to_string(ref_pool.rows()) + " samples");
      o.reference = direct_mcs(*exp.evaluator, ref_pool, cfg.workers, cfg.reference.failure_policy);
    }
    reference_seconds = o.reference->seconds;
    ref_mean = ref_pool.rows() == pool.rows() ? o.al.pool_mean : predict_parallel(o.al.model, ref_pool, cfg.workers).mean;
    attach_reference(o.report, {ref_mean.data(), static_cast<std::size_t>(ref_mean.size())}, *o.reference);
  }

  if (cfg.baseline.enabled) {
    UncertaintySpec s = exp.spec;
    s.seed = sub_seed(cfg.seed, "baseline");
    FitConfig bf = cfg.fit;
    bf.seed = sub_seed(cfg.seed, "baseline-fit");
    auto b = baseline_kriging(cfg.name, s, *exp.evaluator, cfg.baseline.size, bf, ref_pool, cfg.workers);
    b.report.n_v = static_cast<std::size_t>(pool.rows());
    if (o.reference) attach_reference(b.report, {b.pool_mean.data(), static_cast<std::size_t>(b.pool_mean.size())}, *o.reference);
    o.baseline = b.report;
    if (opt.write_files) write_text(out / "baseline_model.json", b.model.to_json());
  }

  if (opt.write_files) {
    write_text(out / "report.json", o.report.to_json());
    write_text(out / "report.csv", PfReport::csv_header() + "\n" + o.report.csv_row() + "\n");
    write_text(out / "state.json", o.al.state.to_json());
    write_text(out / "model.json", o.al.model.to_json());
    write_text(out / "progress.jsonl", progress);
    write_text(out / "predictions.csv", predictions_csv(o.al.pool_mean, o.al.pool_variance));
    write_text(out / "config.json", cfg.to_json());
    if (o.reference) write_text(out / "labels.csv", o.reference->labels_csv());
    if (o.baseline) {
      write_text(out / "baseline.json", o.baseline->to_json());
      write_text(out / "comparison.csv",
                 PfReport::csv_header() + "\n" + o.report.csv_row() + "\n" + o.baseline->csv_row() + "\n");
    }
    write_text(out / "timing.json", timing_json(o.report, o.baseline, reference_seconds));
  }
  return o;
}

McsOutcome run_mcs_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out, bool write_files) {
  const auto exp = resolve(cfg);
  const auto pool = reference_pool(cfg, exp.spec);
  if (pool.rows() == 0) throw ConfigError("field 'active_learning.pool_size': must be positive");
  McsOutcome o;
  o.result = direct_mcs(*exp.evaluator, pool, cfg.workers, cfg.reference.failure_policy);
  o.n = static_cast<std::size_t>(pool.rows());
  const double p = o.result.pf_ref;
  o.cov = (p > 0.0 && p < 1.0) ? cov_pf(p, o.n) : std::numeric_limits<double>::quiet_NaN();
  if (write_files) {
    json j = {{"schema", "alk.mcs/1"},
              {"experiment", cfg.name},
              {"n", o.n},
              {"pf_ref", p},
              {"cov_pf", detail::number(o.cov)},
              {"unstable", static_cast<std::size_t>(std::llround(p * static_cast<double>(o.n)))},
              {"failures", o.result.failures}};
    if (exp.closed_form_pf) j["closed_form_pf"] = *exp.closed_form_pf;
    write_text(out / "mcs.json", j.dump(1) + "\n");
    write_text(out / "labels.csv", o.result.labels_csv());
  }
  return o;
}

SweepParameter sweep_parameter_from_string(const std::string& s) {
  if (s == "N_V" || s == "pool_size") return SweepParameter::PoolSize;
  if (s == "n_e") return SweepParameter::BatchSize;
  if (s == "l_max") return SweepParameter::IterationCap;
  throw ConfigError("unknown sweep parameter '" + s + "' (expected N_V, n_e or l_max)");
}

std::string to_string(SweepParameter p) {
  switch (p) {
    case SweepParameter::PoolSize: return "N_V";
    case SweepParameter::BatchSize: return "n_e";
    case SweepParameter::IterationCap: return "l_max";
  }
  return "";
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string s = "parameter,value,pf_hat,pf_ref,tpr,fdr,n_total,l_total,t_total\n";
  for (const auto& r : rows) {
    const auto& p = r.report;
    s += r.parameter + "," + std::to_string(r.value) + "," + fmt(p.pf_hat) + "," + (p.pf_ref ? fmt(*p.pf_ref) : "") +
         "," + (p.metrics ? fmt(p.metrics->tpr) : "") + "," + (p.metrics ? fmt(p.metrics->fdr) : "") + "," +
         std::to_string(p.n_total) + "," + std::to_string(p.l_total) + "," + fmt(p.timing.total) + "\n";
  }
  return s;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, SweepParameter param, const std::vector<std::size_t>& values,
                                const std::filesystem::path& out, const RunOptions& opt) {
  if (values.empty()) throw ConfigError("sweep: values list is empty");
  ExperimentConfig base = cfg;
  if (param == SweepParameter::PoolSize) {
    // A shared reference pool, so every N_V is scored against the same labels.
    const auto largest = *std::max_element(values.begin(), values.end());
    base.reference.pool_size = std::max(base.reference.pool_size, largest);
  }
  std::map<std::size_t, McsResult> labels;  // by reference pool size
  std::vector<SweepRow> rows;
  for (auto v : values) {
    ExperimentConfig c = base;
    switch (param) {
      case SweepParameter::PoolSize: c.al.pool_size = v; break;
      case SweepParameter::BatchSize: c.al.n_e = v; break;
      case SweepParameter::IterationCap:
        c.al.l_max = v;
        c.al.l_ck = std::min(c.al.l_ck, v);
        break;
    }
    const auto exp = resolve(c);
    try {
      c.al.validate(exp.spec.dimension());
    } catch (const ConfigError& e) {
      throw ConfigError("sweep value " + std::to_string(v) + ": " + e.what());
    }
    const auto ref_n = std::max(c.al.pool_size, c.reference.pool_size);
    RunOptions o = opt;
    if (auto it = labels.find(ref_n); it != labels.end()) o.reference = &it->second;
    if (opt.log) opt.log(to_string(param) + " = " + std::to_string(v));
    auto res = run_al_experiment(c, out / (to_string(param) + "_" + std::to_string(v)), o);
    if (res.reference && !labels.contains(ref_n)) labels.emplace(ref_n, *res.reference);
    rows.push_back({to_string(param), v, res.report});
  }
  if (opt.write_files) write_text(out / "sweep.csv", sweep_csv(rows));
  return rows;
}

}  // namespace alk
