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

#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "alk/error.hpp"
#include "alk/evaluation.hpp"
#include "alk/experiment.hpp"
#include "alk/powersim.hpp"

namespace {

using nlohmann::json;

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  bool verbose = false;
};

void add_common(CLI::App* cmd, Common& c, bool needs_config) {
  auto* opt = cmd->add_option("--config", c.config, "experiment config (JSON)");
  if (needs_config) opt->required();
  cmd->add_option("--out", c.out, "output directory (default: the config's output_dir)");
  cmd->add_option("--seed", c.seed, "override the root seed");
  cmd->add_option("--workers", c.workers, "worker threads, 0 = all cores");
  cmd->add_flag("--verbose,-v", c.verbose, "progress on stderr");
}

alk::ExperimentConfig load_config(const Common& c) {
  auto cfg = alk::ExperimentConfig::load(c.config);
  if (c.seed) {
    cfg.seed = *c.seed;
    cfg.al.seed = *c.seed;
  }
  if (c.workers) {
    cfg.workers = *c.workers;
    cfg.al.workers = *c.workers;
  }
  return cfg;
}

std::filesystem::path out_dir(const Common& c, const alk::ExperimentConfig& cfg) {
  return c.out.empty() ? std::filesystem::path(cfg.output_dir) : std::filesystem::path(c.out);
}

alk::RunOptions run_options(const Common& c) {
  alk::RunOptions o;
  if (c.verbose) o.log = [](const std::string& s) { std::cerr << s << '\n'; };
  return o;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

int cmd_run_al(const Common& c) {
  const auto cfg = load_config(c);
  const auto out = out_dir(c, cfg);
  const auto r = alk::run_al_experiment(cfg, out, run_options(c));
  const auto& p = r.report;
  std::cout << "pf_hat " << num(p.pf_hat);
  if (p.pf_ref) std::cout << "  pf_ref " << num(*p.pf_ref);
  if (p.metrics) std::cout << "  TPR " << num(p.metrics->tpr) << "  FDR " << num(p.metrics->fdr);
  std::cout << "  N_total " << p.n_total << "  iterations " << p.l_total << "  (" << p.stop_reason << ")\n";
  if (r.baseline && r.baseline->metrics)
    std::cout << "baseline pf_hat " << num(r.baseline->pf_hat) << "  TPR " << num(r.baseline->metrics->tpr) << "  FDR "
              << num(r.baseline->metrics->fdr) << "  N_c " << r.baseline->n_total << "\n";
  std::cout << "wrote " << out.string() << "\n";
  return 0;
}

int cmd_run_mcs(const Common& c) {
  const auto cfg = load_config(c);
  const auto out = out_dir(c, cfg);
  if (c.verbose) std::cerr << "direct Monte Carlo on " << std::max(cfg.al.pool_size, cfg.reference.pool_size) << " samples\n";
  const auto r = alk::run_mcs_experiment(cfg, out);
  std::cout << "pf_ref " << num(r.result.pf_ref) << "  n " << r.n << "  cov_pf "
            << (std::isfinite(r.cov) ? num(r.cov) : std::string("undefined")) << "  failures " << r.result.failures
            << "\nwrote " << out.string() << "\n";
  return 0;
}

struct CctArgs {
  std::string grid = "builtin:smib";
  std::string contingency;
  std::string trip;
  std::vector<double> sample;
  bool nominal = false;
  std::optional<double> t_fct;
  double lo = 0.0, hi = 0.5, tol = 1.0 / 240.0;
  std::string trajectory;
};

int cmd_cct(const CctArgs& a) {
  auto grid = alk::load_grid_case(a.grid);
  grid.validate();
  if (grid.contingencies.empty() && a.contingency.empty()) throw alk::ConfigError("grid case defines no contingency");
  auto ctg = a.contingency.empty() ? grid.contingencies.front() : grid.contingency(a.contingency);
  if (!a.trip.empty()) {
    grid.line_index(a.trip);
    ctg.tripped_line = a.trip;
  }
  if (a.t_fct) ctg.t_fct = *a.t_fct;
  grid.validate(ctg);

  std::vector<double> x;
  const auto dim = grid.input_dimension();
  if (!a.sample.empty()) {
    if (a.nominal) throw alk::ConfigError("--sample and --nominal are exclusive");
    x = a.sample;
  } else if (dim > 0) {
    if (!a.nominal) throw alk::ConfigError("the grid case has uncertain inputs: give --sample or --nominal");
    const auto n = grid.uncertainty->nominal();
    x.assign(n.data(), n.data() + n.size());
  }
  if (x.size() != dim)
    throw alk::ConfigError("--sample has " + std::to_string(x.size()) + " values, the grid case expects " +
                           std::to_string(dim));

  const alk::CctSearch search{a.lo, a.hi, a.tol};
  const auto r = alk::tsm(grid, x, ctg, search);
  alk::SimulationOptions sim;
  sim.early_exit = a.trajectory.empty();
  const auto traj = alk::simulate(grid, x, ctg, sim);

  json j = {{"grid", a.grid},
            {"contingency", ctg.name},
            {"fault_bus", ctg.fault_bus},
            {"tripped_line", ctg.tripped_line},
            {"t_fct", ctg.t_fct},
            {"t_cct", r.cct.cct},
            {"margin", r.margin},
            {"stable_at_fct", traj.stable},
            {"censored_stable", r.cct.censored_stable},
            {"censored_unstable", r.cct.censored_unstable},
            {"simulations", r.cct.simulations},
            {"sample", x}};
  std::cout << j.dump(1) << "\n";

  if (!a.trajectory.empty()) {
    std::ostringstream s;
    s << "time";
    const auto nm = traj.delta.empty() ? 0 : traj.delta.front().size();
    for (Eigen::Index m = 0; m < nm; ++m) s << ",delta" << m + 1;
    s << ",max_angle_difference\n";
    s.precision(10);
    for (std::size_t i = 0; i < traj.time.size(); ++i) {
      s << traj.time[i];
      double lo = 0.0, hi = 0.0;
      for (Eigen::Index m = 0; m < nm; ++m) {
        const double d = traj.delta[i](m);
        s << "," << d;
        lo = m == 0 ? d : std::min(lo, d);
        hi = m == 0 ? d : std::max(hi, d);
      }
      s << "," << hi - lo << "\n";
    }
    alk::write_text(a.trajectory, s.str());
  }
  return 0;
}

int cmd_sweep(const Common& c, const std::string& param, const std::vector<std::size_t>& values) {
  const auto p = alk::sweep_parameter_from_string(param);
  if (values.empty()) throw alk::ConfigError("--values: empty list");
  const auto cfg = load_config(c);
  const auto out = out_dir(c, cfg);
  const auto rows = alk::run_sweep(cfg, p, values, out, run_options(c));
  std::cout << alk::sweep_csv(rows) << "wrote " << (out / "sweep.csv").string() << "\n";
  return 0;
}

int cmd_bench(std::size_t samples) {
  bool ok = true;
  std::cout << "case,dimension,reference_pf,brute_force_pf,samples,z,provenance\n";
  for (const auto& a : alk::analytic_suite()) {
    const std::uint64_t seed = a.reference_seed ? a.reference_seed : 1;
    const std::size_t n = a.reference_samples ? a.reference_samples : samples;
    const double p = alk::brute_force_pf(a, n, seed);
    const double sd = std::sqrt(a.reference_pf * (1.0 - a.reference_pf) / static_cast<double>(n));
    const double z = (p - a.reference_pf) / sd;
    const bool pass = a.reference_samples ? p == a.reference_pf : std::abs(z) <= 4.0;
    ok = ok && pass;
    std::cout << a.name << "," << a.dimension << "," << num(a.reference_pf) << "," << num(p) << "," << n << ","
              << num(z) << "," << a.provenance << (pass ? "" : "  MISMATCH") << "\n";
  }
  return ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"alk: active-learning Kriging estimation of transient instability probability"};
  app.require_subcommand(1);

  Common run_al, run_mcs, sweep;
  auto* c_al = app.add_subcommand("run-al", "active-learning estimate, reference labels and report");
  add_common(c_al, run_al, true);
  auto* c_mcs = app.add_subcommand("run-mcs", "direct Monte Carlo reference on the pool");
  add_common(c_mcs, run_mcs, true);

  CctArgs cct;
  auto* c_cct = app.add_subcommand("cct", "critical clearing time of one sample");
  c_cct->add_option("--grid", cct.grid, "builtin:smib, builtin:ieee9 or a case JSON path");
  c_cct->add_option("--contingency", cct.contingency, "contingency name (default: the first)");
  c_cct->add_option("--trip", cct.trip, "override the tripped line");
  c_cct->add_option("--sample", cct.sample, "input values")->delimiter(',');
  c_cct->add_flag("--nominal", cct.nominal, "use the marginal medians");
  c_cct->add_option("--t-fct", cct.t_fct, "fault clearing time, seconds");
  c_cct->add_option("--lo", cct.lo, "bisection lower bound, seconds");
  c_cct->add_option("--hi", cct.hi, "bisection upper bound, seconds");
  c_cct->add_option("--tol", cct.tol, "bisection tolerance, seconds");
  c_cct->add_option("--trajectory", cct.trajectory, "write the trajectory at the clearing time as CSV");
  bool cct_verbose = false;
  c_cct->add_flag("--verbose,-v", cct_verbose);

  std::string sweep_param;
  std::vector<std::size_t> sweep_values;
  auto* c_sweep = app.add_subcommand("sweep", "one run-al per parameter value");
  add_common(c_sweep, sweep, true);
  c_sweep->add_option("--param", sweep_param, "N_V, n_e or l_max")->required();
  c_sweep->add_option("--values", sweep_values, "comma-separated values")->delimiter(',')->required();

  std::size_t bench_samples = 1000000;
  auto* c_bench = app.add_subcommand("bench", "analytic suite self-check against the stored references");
  c_bench->add_option("--samples", bench_samples, "samples for closed-form cases");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (c_al->parsed()) return cmd_run_al(run_al);
    if (c_mcs->parsed()) return cmd_run_mcs(run_mcs);
    if (c_cct->parsed()) return cmd_cct(cct);
    if (c_sweep->parsed()) return cmd_sweep(sweep, sweep_param, sweep_values);
    if (c_bench->parsed()) return cmd_bench(bench_samples);
  } catch (const alk::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
