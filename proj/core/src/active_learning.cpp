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

#include "alk/active_learning.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "alk/error.hpp"
#include "alk/parallel.hpp"
#include "alk/rng.hpp"
#include "json_util.hpp"

namespace alk {

using detail::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::vector<double> row_of(const Eigen::MatrixXd& x, Eigen::Index i) {
  std::vector<double> r(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index k = 0; k < x.cols(); ++k) r[static_cast<std::size_t>(k)] = x(i, k);
  return r;
}

}  // namespace

GridEvaluator::GridEvaluator(GridCase grid, Contingency ctg, CctSearch search, SimulationOptions sim)
    : grid_(std::move(grid)), ctg_(std::move(ctg)), search_(search), sim_(sim) {
  sim_.record = false;
  grid_.validate();
  grid_.validate(ctg_);
}

double GridEvaluator::margin(std::span<const double> x) const { return tsm(grid_, x, ctg_, search_, sim_).margin; }

void ALConfig::validate(std::size_t dimension) const {
  if (n_e < 1) throw ConfigError("active_learning.n_e must be at least 1");
  if (l_max < 1) throw ConfigError("active_learning.l_max must be at least 1");
  if (!(eps_s > 0.0)) throw ConfigError("active_learning.eps_s must be positive");
  if (l_ck < 2 || l_ck > l_max) throw ConfigError("active_learning.l_ck must satisfy 2 <= l_ck <= l_max");
  if (pool_size < 10 * n_e) throw ConfigError("active_learning.pool_size must be at least 10 * n_e");
  if (initial_size < dimension + 1)
    throw ConfigError("active_learning.initial_size must be at least dimension + 1 = " + std::to_string(dimension + 1));
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::None: return "none";
    case StopReason::CriterionMet: return "criterion met";
    case StopReason::IterationCap: return "iteration cap";
    case StopReason::EvaluatorExhausted: return "evaluator exhausted";
  }
  return "none";
}

StopReason stop_reason_from_string(const std::string& s) {
  for (auto r : {StopReason::None, StopReason::CriterionMet, StopReason::IterationCap, StopReason::EvaluatorExhausted})
    if (to_string(r) == s) return r;
  throw ConfigError("unknown stop reason '" + s + "'");
}

double u_value(double mu, double sigma) {
  if (!(sigma > 0.0)) return std::numeric_limits<double>::infinity();
  return std::abs(mu) / sigma;
}

std::vector<std::size_t> select_enrichment(std::span<const double> u, const std::vector<bool>& excluded,
                                           std::size_t n_e) {
  if (u.empty()) throw ConfigError("select_enrichment: empty pool");
  if (!excluded.empty() && excluded.size() != u.size()) throw ConfigError("select_enrichment: exclusion mask size");
  std::vector<std::size_t> cand;
  cand.reserve(u.size());
  for (std::size_t i = 0; i < u.size(); ++i)
    if ((excluded.empty() || !excluded[i]) && std::isfinite(u[i])) cand.push_back(i);
  const auto k = std::min(n_e, cand.size());
  const auto less = [&](std::size_t a, std::size_t b) { return u[a] < u[b] || (u[a] == u[b] && a < b); };
  std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end(), less);
  cand.resize(k);
  return cand;
}

double estimate_pf(std::span<const double> margins) {
  if (margins.empty()) return 0.0;
  const auto neg = std::count_if(margins.begin(), margins.end(), [](double m) { return m < 0.0; });
  return static_cast<double>(neg) / static_cast<double>(margins.size());
}

bool check_stop(std::span<const double> history, double eps_s, std::size_t l_ck) {
  if (l_ck == 0 || history.size() < l_ck) return false;
  const auto window = history.last(l_ck);
  const auto [lo, hi] = std::minmax_element(window.begin(), window.end());
  if (!(*lo > 0.0)) return false;
  // slack of a few ulps of the operands, lost in the subtraction, so that a
  // ratio equal to eps_s in decimal still stops
  return *hi - *lo <= eps_s * *lo + 4.0 * std::numeric_limits<double>::epsilon() * *hi;
}

ALSeeds ALSeeds::from(std::uint64_t root) {
  return {sub_seed(root, "initial"), sub_seed(root, "pool"), sub_seed(root, "fit")};
}

BatchEvaluation evaluate_rows(const Evaluator& evaluator, const Eigen::MatrixXd& x, std::size_t workers) {
  const auto t0 = Clock::now();
  const auto n = static_cast<std::size_t>(x.rows());
  BatchEvaluation out;
  out.margins.assign(n, std::numeric_limits<double>::quiet_NaN());
  out.ok.assign(n, false);
  out.errors.assign(n, {});
  parallel_for(n, workers, [&](std::size_t i) {
    const auto r = row_of(x, static_cast<Eigen::Index>(i));
    try {
      const double m = evaluator.margin(r);
      if (!std::isfinite(m)) throw EvaluationError("evaluator returned a non-finite margin");
      out.margins[i] = m;
      out.ok[i] = true;
    } catch (const EvaluationError& e) {
      out.errors[i] = e.what();
    }
  });
  out.seconds = seconds_since(t0);
  return out;
}

Prediction predict_parallel(const KrigingModel& model, const Eigen::MatrixXd& x, std::size_t workers) {
  const auto n = x.rows();
  const auto w = static_cast<Eigen::Index>(std::min<std::size_t>(resolve_workers(workers), 64));
  const Eigen::Index chunk = std::max<Eigen::Index>(4096, (n + w - 1) / std::max<Eigen::Index>(w, 1));
  const auto parts = static_cast<std::size_t>((n + chunk - 1) / chunk);
  Prediction out;
  out.mean.resize(n);
  out.variance.resize(n);
  parallel_for(parts, workers, [&](std::size_t p) {
    const auto start = static_cast<Eigen::Index>(p) * chunk;
    const auto len = std::min(chunk, n - start);
    const auto part = model.predict(x.middleRows(start, len));
    out.mean.segment(start, len) = part.mean;
    out.variance.segment(start, len) = part.variance;
  });
  return out;
}

std::size_t ALState::enrichment_iterations() const {
  return static_cast<std::size_t>(std::count_if(log.begin(), log.end(), [](const auto& r) { return !r.selected.empty(); }));
}

ALResult run_al(const UncertaintySpec& spec, const Evaluator& evaluator, const ALConfig& cfg_in, FitConfig fit_cfg,
                const Eigen::MatrixXd* pool, const ALHooks& hooks) {
  const auto t_start = Clock::now();
  spec.validate();
  const auto dim = spec.dimension();
  if (evaluator.dimension() != dim)
    throw ConfigError("evaluator dimension " + std::to_string(evaluator.dimension()) + " differs from uncertainty dimension " +
                      std::to_string(dim));
  ALConfig cfg = cfg_in;
  if (pool) {
    if (static_cast<std::size_t>(pool->cols()) != dim) throw ConfigError("selection pool has the wrong dimension");
    cfg.pool_size = static_cast<std::size_t>(pool->rows());
  }
  cfg.validate(dim);
  fit_cfg.validate(dim);
  const auto seeds = ALSeeds::from(cfg.seed);

  ALResult res;
  ALState& st = res.state;
  if (pool) {
    res.pool = *pool;
  } else {
    UncertaintySpec s = spec;
    s.seed = seeds.pool;
    res.pool = mc_sample(s, cfg.pool_size).values;
  }
  const auto n_v = static_cast<std::size_t>(res.pool.rows());

  auto abort = [&](auto&& fn) {
    try {
      return fn();
    } catch (const Error&) {
      if (hooks.on_abort) hooks.on_abort(st);
      throw;
    }
  };

  std::set<std::vector<double>> seen;
  std::vector<double> xs_flat;
  std::vector<double> ts;
  auto append = [&](const std::vector<double>& x, double t, long origin) {
    seen.insert(x);
    xs_flat.insert(xs_flat.end(), x.begin(), x.end());
    ts.push_back(t);
    st.origin.push_back(origin);
  };
  auto sync = [&]() {
    st.x = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        xs_flat.data(), static_cast<Eigen::Index>(ts.size()), static_cast<Eigen::Index>(dim));
    st.t = Eigen::Map<const Eigen::VectorXd>(ts.data(), static_cast<Eigen::Index>(ts.size()));
  };
  auto absorb = [&](const Eigen::MatrixXd& x, const BatchEvaluation& ev, const std::vector<long>& origin) {
    st.evaluations += static_cast<std::size_t>(x.rows());
    res.timing.evaluator += ev.seconds;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      auto r = row_of(x, i);
      const auto ui = static_cast<std::size_t>(i);
      if (ev.ok[ui]) {
        if (!seen.contains(r)) append(r, ev.margins[ui], origin[ui]);
      } else {
        st.failures.push_back({origin[ui], std::move(r), ev.errors[ui]});
      }
    }
    sync();
  };

  {
    UncertaintySpec s = spec;
    s.seed = seeds.initial;
    const auto init = lhs_sample(s, cfg.initial_size).values;
    const auto ev = evaluate_rows(evaluator, init, cfg.workers);
    absorb(init, ev, std::vector<long>(cfg.initial_size, -1));
  }

  std::vector<bool> enriched(n_v, false);
  std::optional<std::vector<double>> warm;
  for (std::size_t l = 1; l <= cfg.l_max; ++l) {
    const auto t_sg = Clock::now();
    fit_cfg.seed = mix64(seeds.fit + l);
    fit_cfg.warm_start = warm;
    const auto fitted = abort([&] { return fit(st.x, st.t, fit_cfg); });
    res.model = fitted.model;
    warm = fitted.model.theta();
    const auto pred = predict_parallel(res.model, res.pool, cfg.workers);
    res.pool_mean = pred.mean;
    res.pool_variance = pred.variance;
    res.timing.surrogate += seconds_since(t_sg);

    IterationRecord rec;
    rec.iteration = l;
    rec.n_train = static_cast<std::size_t>(st.x.rows());
    rec.pf_hat = estimate_pf({pred.mean.data(), static_cast<std::size_t>(pred.mean.size())});
    rec.theta = fitted.model.theta();
    rec.loo_objective = fitted.objective;
    st.pf_history.push_back(rec.pf_hat);
    res.pf_hat = rec.pf_hat;

    std::vector<double> u(n_v);
    double min_u = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_v; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      u[i] = u_value(pred.mean(ii), std::sqrt(pred.variance(ii)));
      if (!enriched[i]) min_u = std::min(min_u, u[i]);
    }
    rec.min_u = min_u;

    auto finish = [&](StopReason why) {
      st.stop = why;
      st.iteration = l;
      st.log.push_back(rec);
      if (hooks.on_iteration) hooks.on_iteration(st.log.back(), st, seconds_since(t_start));
    };
    if (check_stop(st.pf_history, cfg.eps_s, cfg.l_ck)) {
      finish(StopReason::CriterionMet);
      break;
    }
    if (l == cfg.l_max) {
      finish(StopReason::IterationCap);
      break;
    }

    std::vector<std::size_t> chosen;
    while (chosen.size() < cfg.n_e) {
      const auto pick = select_enrichment(u, enriched, cfg.n_e - chosen.size());
      if (pick.empty()) break;
      for (auto i : pick) {
        enriched[i] = true;
        if (!seen.contains(row_of(res.pool, static_cast<Eigen::Index>(i)))) chosen.push_back(i);
      }
    }
    if (chosen.empty()) {
      finish(StopReason::EvaluatorExhausted);
      break;
    }
    Eigen::MatrixXd xe(static_cast<Eigen::Index>(chosen.size()), static_cast<Eigen::Index>(dim));
    std::vector<long> origin;
    for (std::size_t j = 0; j < chosen.size(); ++j) {
      xe.row(static_cast<Eigen::Index>(j)) = res.pool.row(static_cast<Eigen::Index>(chosen[j]));
      origin.push_back(static_cast<long>(chosen[j]));
      rec.selected.push_back(chosen[j]);
      rec.u_values.push_back(u[chosen[j]]);
      rec.predicted.push_back(pred.mean(static_cast<Eigen::Index>(chosen[j])));
    }
    const auto ev = evaluate_rows(evaluator, xe, cfg.workers);
    rec.margins = ev.margins;
    absorb(xe, ev, origin);
    st.iteration = l;
    st.log.push_back(rec);
    if (hooks.on_iteration) hooks.on_iteration(st.log.back(), st, seconds_since(t_start));
  }
  res.timing.total = seconds_since(t_start);
  return res;
}

// ---------------------------------------------------------------------------
// State serialization

namespace {

json doubles(const std::vector<double>& v) {
  json a = json::array();
  for (double d : v) a.push_back(detail::number(d));
  return a;
}

std::vector<double> read_doubles(const json& a, const std::string& path) {
  if (!a.is_array()) throw ConfigError("field '" + path + "': expected an array");
  std::vector<double> v;
  for (std::size_t i = 0; i < a.size(); ++i)
    v.push_back(a[i].is_null() ? std::numeric_limits<double>::quiet_NaN()
                               : detail::read_as<double>(a[i], path + "[" + std::to_string(i) + "]"));
  return v;
}

template <class T>
std::vector<T> read_vec(const json& a, const std::string& path) {
  if (!a.is_array()) throw ConfigError("field '" + path + "': expected an array");
  std::vector<T> v;
  for (std::size_t i = 0; i < a.size(); ++i) v.push_back(detail::read_as<T>(a[i], path + "[" + std::to_string(i) + "]"));
  return v;
}

bool same_doubles(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!(a[i] == b[i] || (std::isnan(a[i]) && std::isnan(b[i])))) return false;
  return true;
}

bool same_record(const IterationRecord& a, const IterationRecord& b) {
  return a.iteration == b.iteration && a.n_train == b.n_train && a.pf_hat == b.pf_hat &&
         (a.min_u == b.min_u || (std::isnan(a.min_u) && std::isnan(b.min_u))) && a.theta == b.theta &&
         a.loo_objective == b.loo_objective && a.selected == b.selected && a.u_values == b.u_values &&
         a.predicted == b.predicted && same_doubles(a.margins, b.margins);
}

}  // namespace

bool operator==(const ALState& a, const ALState& b) {
  if (a.log.size() != b.log.size()) return false;
  for (std::size_t i = 0; i < a.log.size(); ++i)
    if (!same_record(a.log[i], b.log[i])) return false;
  return a.iteration == b.iteration && a.x == b.x && a.t == b.t && a.origin == b.origin &&
         a.pf_history == b.pf_history && a.failures == b.failures && a.evaluations == b.evaluations &&
         a.stop == b.stop;
}

std::string ALState::to_json() const {
  json j;
  j["schema"] = "alk.alstate/1";
  j["iteration"] = iteration;
  j["stop_reason"] = to_string(stop);
  j["evaluations"] = evaluations;
  j["enrichment_iterations"] = enrichment_iterations();
  j["pf_history"] = doubles(pf_history);
  json train = json::array();
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    train.push_back({{"x", doubles(row_of(x, i))}, {"t", t(i)}, {"origin", origin[static_cast<std::size_t>(i)]}});
  j["training"] = train;
  json lg = json::array();
  for (const auto& r : log) {
    // min_u is +inf once every pool sample is consumed; JSON stores it as null.
    lg.push_back({{"iteration", r.iteration},
                  {"n_train", r.n_train},
                  {"pf_hat", r.pf_hat},
                  {"min_u", detail::number(r.min_u)},
                  {"theta", r.theta},
                  {"loo_objective", r.loo_objective},
                  {"selected", r.selected},
                  {"u_values", doubles(r.u_values)},
                  {"predicted", doubles(r.predicted)},
                  {"margins", doubles(r.margins)}});
  }
  j["log"] = lg;
  json fl = json::array();
  for (const auto& f : failures) fl.push_back({{"origin", f.pool_index}, {"x", doubles(f.x)}, {"message", f.message}});
  j["failures"] = fl;
  return j.dump(1) + "\n";
}

ALState ALState::from_json(const std::string& text) {
  using detail::required;
  const json j = detail::parse_json(text, "AL state");
  if (!j.is_object() || j.value("schema", "") != "alk.alstate/1")
    throw ConfigError("field 'schema': expected 'alk.alstate/1'");
  ALState s;
  s.iteration = required<std::size_t>(j, "iteration", "");
  s.stop = stop_reason_from_string(required<std::string>(j, "stop_reason", ""));
  s.evaluations = required<std::size_t>(j, "evaluations", "");
  s.pf_history = read_doubles(detail::required_array(j, "pf_history", ""), "pf_history");
  const auto& train = detail::required_array(j, "training", "");
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto ctx = "training[" + std::to_string(i) + "]";
    rows.push_back(read_doubles(detail::required_array(train[i], "x", ctx), ctx + ".x"));
    s.origin.push_back(required<long>(train[i], "origin", ctx));
  }
  const auto dim = rows.empty() ? 0 : rows[0].size();
  s.x.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
  s.t.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != dim) throw ConfigError("field 'training[" + std::to_string(i) + "].x': wrong dimension");
    for (std::size_t k = 0; k < dim; ++k) s.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    s.t(static_cast<Eigen::Index>(i)) = required<double>(train[i], "t", "training[" + std::to_string(i) + "]");
  }
  const auto& lg = detail::required_array(j, "log", "");
  for (std::size_t i = 0; i < lg.size(); ++i) {
    const auto ctx = "log[" + std::to_string(i) + "]";
    const auto& e = lg[i];
    IterationRecord r;
    r.iteration = required<std::size_t>(e, "iteration", ctx);
    r.n_train = required<std::size_t>(e, "n_train", ctx);
    r.pf_hat = required<double>(e, "pf_hat", ctx);
    r.min_u = e.contains("min_u") && !e["min_u"].is_null() ? required<double>(e, "min_u", ctx)
                                                            : std::numeric_limits<double>::infinity();
    r.theta = read_doubles(detail::required_array(e, "theta", ctx), ctx + ".theta");
    r.loo_objective = required<double>(e, "loo_objective", ctx);
    r.selected = read_vec<std::size_t>(detail::required_array(e, "selected", ctx), ctx + ".selected");
    r.u_values = read_doubles(detail::required_array(e, "u_values", ctx), ctx + ".u_values");
    r.predicted = read_doubles(detail::required_array(e, "predicted", ctx), ctx + ".predicted");
    r.margins = read_doubles(detail::required_array(e, "margins", ctx), ctx + ".margins");
    s.log.push_back(std::move(r));
  }
  const auto& fl = detail::required_array(j, "failures", "");
  for (std::size_t i = 0; i < fl.size(); ++i) {
    const auto ctx = "failures[" + std::to_string(i) + "]";
    FailedEvaluation f;
    f.pool_index = required<long>(fl[i], "origin", ctx);
    f.x = read_doubles(detail::required_array(fl[i], "x", ctx), ctx + ".x");
    f.message = required<std::string>(fl[i], "message", ctx);
    s.failures.push_back(std::move(f));
  }
  return s;
}

}  // namespace alk
