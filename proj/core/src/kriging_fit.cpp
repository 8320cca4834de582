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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "alk/error.hpp"
#include "alk/kriging.hpp"
#include "alk/parallel.hpp"
#include "alk/rng.hpp"
#include "kriging_detail.hpp"

namespace alk {

void FitConfig::validate(std::size_t dimension) const {
  auto check_bounds = [&](const std::vector<double>& v, const char* name) {
    if (v.size() != 1 && v.size() != dimension)
      throw ConfigError(std::string("fit.") + name + ": expected 1 or " + std::to_string(dimension) + " entries");
    for (double b : v)
      if (!(b > 0.0 && std::isfinite(b))) throw ConfigError(std::string("fit.") + name + ": bounds must be positive");
  };
  check_bounds(theta_lo, "theta_lo");
  check_bounds(theta_hi, "theta_hi");
  for (std::size_t d = 0; d < dimension; ++d)
    if (!(lower(d) <= upper(d))) throw ConfigError("fit: theta_lo exceeds theta_hi");
  if (population < 4) throw ConfigError("fit.population must be at least 4");
  if (!(nugget >= 0.0) || !(max_nugget >= nugget)) throw ConfigError("fit: require 0 <= nugget <= max_nugget");
  if (warm_start && warm_start->size() != dimension) throw ConfigError("fit.warm_start: dimension mismatch");
}

namespace {

using Point = std::vector<double>;  // log10(theta)

class Objective {
 public:
  Objective(const detail::Standardized& s, const FitConfig& cfg, Point lo, Point hi)
      : s_(s), cfg_(cfg), lo_(std::move(lo)), hi_(std::move(hi)) {}

  Point clamp(Point p) const {
    for (std::size_t k = 0; k < p.size(); ++k) p[k] = std::clamp(p[k], lo_[k], hi_[k]);
    return p;
  }

  double operator()(const Point& p) const {
    Point theta(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) theta[k] = std::pow(10.0, p[k]);
    return detail::objective(s_, theta, cfg_.nugget, cfg_.max_nugget);
  }

  // Evaluates all points, in parallel, and records the best seen.
  std::vector<double> batch(const std::vector<Point>& pts) {
    std::vector<double> f(pts.size());
    parallel_for(pts.size(), cfg_.workers, [&](std::size_t i) { f[i] = (*this)(pts[i]); });
    for (std::size_t i = 0; i < pts.size(); ++i) note(pts[i], f[i]);
    return f;
  }

  double single(const Point& p) {
    const double f = (*this)(p);
    note(p, f);
    return f;
  }

  const Point& best() const { return best_; }
  double best_value() const { return best_f_; }
  std::size_t evaluations() const { return evals_; }
  const Point& lo() const { return lo_; }
  const Point& hi() const { return hi_; }

 private:
  void note(const Point& p, double f) {
    ++evals_;
    if (f < best_f_ || best_.empty()) {
      best_f_ = f;
      best_ = p;
    }
  }

  const detail::Standardized& s_;
  const FitConfig& cfg_;
  Point lo_, hi_;
  Point best_;
  double best_f_ = std::numeric_limits<double>::infinity();
  std::size_t evals_ = 0;
};

std::vector<std::size_t> ranking(const std::vector<double>& f) {
  std::vector<std::size_t> idx(f.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return f[a] < f[b]; });
  return idx;
}

double genetic_search(Objective& obj, const FitConfig& cfg, Rng& rng) {
  const std::size_t m = obj.lo().size();
  const std::size_t np = cfg.population;
  const std::size_t elite = std::min<std::size_t>(2, np - 1);
  constexpr double kBlend = 0.5;

  std::vector<Point> pop(np, Point(m));
  for (auto& p : pop)
    for (std::size_t k = 0; k < m; ++k) p[k] = obj.lo()[k] + rng.uniform() * (obj.hi()[k] - obj.lo()[k]);
  if (cfg.warm_start) {
    for (std::size_t k = 0; k < m; ++k) pop[0][k] = std::log10((*cfg.warm_start)[k]);
    pop[0] = obj.clamp(pop[0]);
  }
  std::vector<double> fit = obj.batch(pop);
  double best_member = *std::min_element(fit.begin(), fit.end());

  auto tournament = [&]() {
    const std::size_t a = static_cast<std::size_t>(rng.below(np));
    const std::size_t b = static_cast<std::size_t>(rng.below(np));
    return fit[b] < fit[a] ? b : a;
  };

  for (std::size_t gen = 0; gen < cfg.generations; ++gen) {
    const auto order = ranking(fit);
    const double progress = static_cast<double>(gen) / static_cast<double>(std::max<std::size_t>(cfg.generations, 1));
    std::vector<Point> next;
    std::vector<double> next_fit;
    for (std::size_t e = 0; e < elite; ++e) {
      next.push_back(pop[order[e]]);
      next_fit.push_back(fit[order[e]]);
    }
    std::vector<Point> children;
    while (next.size() + children.size() < np) {
      const Point& pa = pop[tournament()];
      const Point& pb = pop[tournament()];
      Point child(m);
      for (std::size_t k = 0; k < m; ++k) {
        const double lo = std::min(pa[k], pb[k]);
        const double hi = std::max(pa[k], pb[k]);
        const double span = hi - lo;
        child[k] = lo - kBlend * span + rng.uniform() * (1.0 + 2.0 * kBlend) * span;
        const double range = obj.hi()[k] - obj.lo()[k];
        if (rng.uniform() < std::max(0.2, 1.0 / static_cast<double>(m)))
          child[k] += rng.normal() * range * (0.1 * (1.0 - progress) + 0.01);
      }
      children.push_back(obj.clamp(std::move(child)));
    }
    const auto child_fit = obj.batch(children);
    for (std::size_t i = 0; i < children.size(); ++i) {
      next.push_back(std::move(children[i]));
      next_fit.push_back(child_fit[i]);
    }
    pop = std::move(next);
    fit = std::move(next_fit);
    best_member = std::min(best_member, *std::min_element(fit.begin(), fit.end()));
  }
  return best_member;
}

void nelder_mead(Objective& obj, std::size_t iterations) {
  const std::size_t m = obj.lo().size();
  if (iterations == 0 || !std::isfinite(obj.best_value())) return;
  std::vector<Point> simplex{obj.best()};
  std::vector<double> f{obj.best_value()};
  for (std::size_t k = 0; k < m; ++k) {
    Point p = obj.best();
    const double step = 0.05 * (obj.hi()[k] - obj.lo()[k]);
    p[k] = p[k] + step <= obj.hi()[k] ? p[k] + step : p[k] - step;
    p = obj.clamp(p);
    f.push_back(obj.single(p));
    simplex.push_back(std::move(p));
  }

  auto along = [&](const Point& c, const Point& w, double t) {
    Point p(m);
    for (std::size_t k = 0; k < m; ++k) p[k] = c[k] + t * (w[k] - c[k]);
    return obj.clamp(std::move(p));
  };

  for (std::size_t it = 0; it < iterations; ++it) {
    const auto order = ranking(f);
    std::vector<Point> s2;
    std::vector<double> f2;
    for (auto i : order) {
      s2.push_back(simplex[i]);
      f2.push_back(f[i]);
    }
    simplex = std::move(s2);
    f = std::move(f2);
    if (std::isfinite(f.back()) && f.back() - f.front() <= 1e-12 * (1.0 + std::abs(f.front()))) break;

    Point c(m, 0.0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t k = 0; k < m; ++k) c[k] += simplex[i][k] / static_cast<double>(m);
    const Point& worst = simplex[m];

    const Point xr = along(c, worst, -1.0);
    const double fr = obj.single(xr);
    if (fr < f[0]) {
      const Point xe = along(c, worst, -2.0);
      const double fe = obj.single(xe);
      if (fe < fr) {
        simplex[m] = xe;
        f[m] = fe;
      } else {
        simplex[m] = xr;
        f[m] = fr;
      }
    } else if (fr < f[m - 1]) {
      simplex[m] = xr;
      f[m] = fr;
    } else {
      const bool outside = fr < f[m];
      const Point xc = along(c, worst, outside ? -0.5 : 0.5);
      const double fc = obj.single(xc);
      if (fc < (outside ? fr : f[m])) {
        simplex[m] = xc;
        f[m] = fc;
      } else {
        for (std::size_t i = 1; i <= m; ++i) {
          simplex[i] = along(simplex[0], simplex[i], 0.5);
          f[i] = obj.single(simplex[i]);
        }
      }
    }
  }
}

}  // namespace

FitResult fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& t, const FitConfig& cfg) {
  const auto m = static_cast<std::size_t>(x.cols());
  if (m == 0) throw ConfigError("fit: inputs have no dimensions");
  if (x.rows() != t.size()) throw ConfigError("fit: input and output sizes differ");
  const auto min_n = std::max<Eigen::Index>(x.cols() + 1, 10);
  if (x.rows() < min_n) throw ConfigError("fit: at least " + std::to_string(min_n) + " training samples required");
  if (!x.allFinite() || !t.allFinite()) throw ConfigError("fit: training data must be finite");
  cfg.validate(m);

  const auto s = detail::standardize(x, t);
  Point lo(m), hi(m);
  for (std::size_t k = 0; k < m; ++k) {
    lo[k] = std::log10(cfg.lower(k));
    hi[k] = std::log10(cfg.upper(k));
  }
  Objective obj(s, cfg, lo, hi);
  Rng rng(cfg.seed);
  FitResult out;
  out.best_population_objective = genetic_search(obj, cfg, rng);
  nelder_mead(obj, cfg.polish_iterations);
  if (!std::isfinite(obj.best_value()))
    throw NumericalError("fit: correlation matrix not positive definite anywhere in the search");

  std::vector<double> theta(m);
  for (std::size_t k = 0; k < m; ++k) theta[k] = std::pow(10.0, obj.best()[k]);
  out.model = KrigingModel::build(x, t, theta, cfg.nugget, cfg.max_nugget);
  out.objective = obj.best_value();
  out.evaluations = obj.evaluations();
  return out;
}

}  // namespace alk
