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

#include "alk/sampling.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <Eigen/Cholesky>

#include "alk/error.hpp"
#include "alk/rng.hpp"

namespace alk {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double empirical_quantile(const std::vector<double>& v, double u) {
  const auto n = static_cast<double>(v.size());
  auto k = static_cast<std::ptrdiff_t>(std::ceil(u * n)) - 1;
  k = std::clamp<std::ptrdiff_t>(k, 0, static_cast<std::ptrdiff_t>(v.size()) - 1);
  return v[static_cast<std::size_t>(k)];
}

Eigen::MatrixXd equicorrelation(std::size_t k, double rho) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k), rho);
  c.diagonal().setOnes();
  return c;
}

Eigen::MatrixXd group_cholesky(const CorrelationGroup& g) {
  Eigen::LLT<Eigen::MatrixXd> llt(equicorrelation(g.members.size(), g.rho));
  if (llt.info() != Eigen::Success) throw ConfigError("correlation group is not positive definite");
  return llt.matrixL();
}

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

// Reorders the columns of `u` listed in `cols` so that their van der Waerden
// scores carry the target equi-correlation. Only row order within each column
// changes, so stratification is untouched.
void iman_conover(Eigen::MatrixXd& u, const CorrelationGroup& g, Rng& rng) {
  const auto n = static_cast<std::size_t>(u.rows());
  const auto k = g.members.size();
  if (k < 2 || n <= k) return;

  Eigen::VectorXd scores(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    scores(static_cast<Eigen::Index>(i)) = normal_quantile(static_cast<double>(i + 1) / static_cast<double>(n + 1));

  Eigen::MatrixXd s(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  std::vector<std::size_t> perm(n);
  for (std::size_t j = 0; j < k; ++j) {
    std::iota(perm.begin(), perm.end(), 0);
    shuffle(perm, rng);
    for (std::size_t i = 0; i < n; ++i)
      s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = scores(static_cast<Eigen::Index>(perm[i]));
  }

  const Eigen::MatrixXd centered = s.rowwise() - s.colwise().mean();
  Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
  const Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
  const Eigen::MatrixXd corr = sd.cwiseInverse().asDiagonal() * cov * sd.cwiseInverse().asDiagonal();
  Eigen::LLT<Eigen::MatrixXd> q(corr);
  if (q.info() != Eigen::Success) return;
  const Eigen::MatrixXd p = group_cholesky(g);
  // T = S * (P Q^-1)^T
  const Eigen::MatrixXd qinv = q.matrixL().solve(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)));
  const Eigen::MatrixXd t = s * (p * qinv).transpose();

  std::vector<std::size_t> order(n);
  std::vector<double> sorted(n);
  for (std::size_t j = 0; j < k; ++j) {
    const auto col = static_cast<Eigen::Index>(g.members[j]);
    for (std::size_t i = 0; i < n; ++i) sorted[i] = u(static_cast<Eigen::Index>(i), col);
    std::sort(sorted.begin(), sorted.end());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return t(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(j)) < t(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(j));
    });
    for (std::size_t r = 0; r < n; ++r) u(static_cast<Eigen::Index>(order[r]), col) = sorted[r];
  }
}

}  // namespace

void MarginalSpec::validate() const {
  std::visit(overloaded{
                 [&](const GaussianMarginal& g) {
                   if (!(std::isfinite(g.mean) && g.std > 0.0 && std::isfinite(g.std)))
                     throw ConfigError("marginal '" + name + "': Gaussian requires finite mean and std > 0");
                 },
                 [&](const WeibullMarginal& w) {
                   if (!(w.scale > 0.0 && w.shape > 0.0 && std::isfinite(w.scale) && std::isfinite(w.shape)))
                     throw ConfigError("marginal '" + name + "': Weibull requires scale > 0 and shape > 0");
                 },
                 [&](const EmpiricalMarginal& e) {
                   if (e.values.empty()) throw ConfigError("marginal '" + name + "': empirical data is empty");
                   for (double v : e.values)
                     if (!std::isfinite(v)) throw ConfigError("marginal '" + name + "': empirical data not finite");
                   if (!std::is_sorted(e.values.begin(), e.values.end()))
                     throw ConfigError("marginal '" + name + "': empirical data must be sorted");
                 },
             },
             dist);
}

double MarginalSpec::quantile(double u) const {
  return std::visit(overloaded{
                        [&](const GaussianMarginal& g) { return g.mean + g.std * normal_quantile(u); },
                        [&](const WeibullMarginal& w) { return w.scale * std::pow(-std::log1p(-u), 1.0 / w.shape); },
                        [&](const EmpiricalMarginal& e) { return empirical_quantile(e.values, u); },
                    },
                    dist);
}

double MarginalSpec::cdf(double x) const {
  return std::visit(overloaded{
                        [&](const GaussianMarginal& g) { return normal_cdf((x - g.mean) / g.std); },
                        [&](const WeibullMarginal& w) {
                          return x <= 0.0 ? 0.0 : -std::expm1(-std::pow(x / w.scale, w.shape));
                        },
                        [&](const EmpiricalMarginal& e) {
                          const auto it = std::upper_bound(e.values.begin(), e.values.end(), x);
                          return static_cast<double>(it - e.values.begin()) / static_cast<double>(e.values.size());
                        },
                    },
                    dist);
}

double MarginalSpec::median() const { return quantile(0.5); }

double MarginalSpec::from_normal(double z) const {
  return std::visit(overloaded{
                        [&](const GaussianMarginal& g) { return g.mean + g.std * z; },
                        [&](const WeibullMarginal& w) {
                          // survival probability computed directly keeps the upper tail finite
                          const double surv = 0.5 * std::erfc(z / std::sqrt(2.0));
                          return w.scale * std::pow(-std::log(surv), 1.0 / w.shape);
                        },
                        [&](const EmpiricalMarginal& e) { return empirical_quantile(e.values, normal_cdf(z)); },
                    },
                    dist);
}

MarginalSpec gaussian(std::string name, double mean, double std) {
  return MarginalSpec{std::move(name), GaussianMarginal{mean, std}};
}

MarginalSpec weibull(std::string name, double scale, double shape) {
  return MarginalSpec{std::move(name), WeibullMarginal{scale, shape}};
}

MarginalSpec empirical(std::string name, std::vector<double> values, std::string units) {
  std::sort(values.begin(), values.end());
  return MarginalSpec{std::move(name), EmpiricalMarginal{std::move(values), std::move(units)}};
}

void UncertaintySpec::validate() const {
  if (dims.empty()) throw ConfigError("uncertainty spec has no dimensions");
  for (const auto& d : dims) d.validate();
  std::vector<int> seen(dims.size(), 0);
  for (const auto& g : groups) {
    if (g.members.empty()) throw ConfigError("correlation group has no members");
    if (!(g.rho >= -1.0 && g.rho < 1.0)) throw ConfigError("group correlation must lie in [-1, 1)");
    const auto k = static_cast<double>(g.members.size());
    if (g.members.size() > 1 && !(g.rho > -1.0 / (k - 1.0)))
      throw ConfigError("group correlation " + std::to_string(g.rho) + " is not positive definite for group size " +
                        std::to_string(g.members.size()));
    for (auto m : g.members) {
      if (m >= dims.size()) throw ConfigError("correlation group member " + std::to_string(m) + " out of range");
      if (seen[m]++) throw ConfigError("dimension " + std::to_string(m) + " belongs to more than one group");
    }
  }
}

std::vector<CorrelationGroup> UncertaintySpec::partition() const {
  std::vector<int> owner(dims.size(), -1);
  for (std::size_t g = 0; g < groups.size(); ++g)
    for (auto m : groups[g].members) owner[m] = static_cast<int>(g);
  std::vector<CorrelationGroup> out;
  std::vector<bool> emitted(groups.size(), false);
  for (std::size_t d = 0; d < dims.size(); ++d) {
    if (owner[d] < 0) {
      out.push_back({{d}, 0.0});
    } else if (!emitted[static_cast<std::size_t>(owner[d])]) {
      emitted[static_cast<std::size_t>(owner[d])] = true;
      out.push_back(groups[static_cast<std::size_t>(owner[d])]);
    }
  }
  return out;
}

Eigen::VectorXd UncertaintySpec::nominal() const {
  Eigen::VectorXd x(static_cast<Eigen::Index>(dims.size()));
  for (std::size_t d = 0; d < dims.size(); ++d) x(static_cast<Eigen::Index>(d)) = dims[d].median();
  return x;
}

SampleSet lhs_sample(const UncertaintySpec& spec, std::size_t n) {
  spec.validate();
  if (n < 1) throw ConfigError("lhs_sample requires n >= 1");
  const auto m = spec.dimension();
  Rng rng(spec.seed);

  Eigen::MatrixXd u(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  std::vector<std::size_t> perm(n);
  for (std::size_t j = 0; j < m; ++j) {
    std::iota(perm.begin(), perm.end(), 0);
    shuffle(perm, rng);
    for (std::size_t i = 0; i < n; ++i)
      u(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          (static_cast<double>(perm[i]) + rng.uniform()) / static_cast<double>(n);
  }
  for (const auto& g : spec.partition())
    if (g.members.size() > 1 && g.rho != 0.0) iman_conover(u, g, rng);

  SampleSet out;
  out.tag = SampleTag::Initial;
  out.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = static_cast<Eigen::Index>(i), c = static_cast<Eigen::Index>(j);
      out.values(r, c) = spec.dims[j].from_normal(normal_quantile(u(r, c)));
    }
  return out;
}

SampleSet mc_sample(const UncertaintySpec& spec, std::size_t n) {
  spec.validate();
  const auto m = spec.dimension();
  const auto groups = spec.partition();
  std::vector<Eigen::MatrixXd> factors;
  factors.reserve(groups.size());
  for (const auto& g : groups) factors.push_back(group_cholesky(g));

  Rng rng(spec.seed);
  SampleSet out;
  out.tag = SampleTag::Pool;
  out.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  Eigen::VectorXd z;
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
      const auto& g = groups[gi];
      const auto k = static_cast<Eigen::Index>(g.members.size());
      z.resize(k);
      for (Eigen::Index a = 0; a < k; ++a) z(a) = rng.normal();
      const Eigen::VectorXd y = factors[gi].triangularView<Eigen::Lower>() * z;
      for (Eigen::Index a = 0; a < k; ++a) {
        const auto d = g.members[static_cast<std::size_t>(a)];
        out.values(r, static_cast<Eigen::Index>(d)) = spec.dims[d].from_normal(y(a));
      }
    }
  }
  return out;
}

void WindTurbineCurve::validate() const {
  if (!(rated_power > 0.0)) throw ConfigError("wind curve: rated power must be positive");
  if (!(cut_in > 0.0 && cut_in < rated_speed && rated_speed < cut_out))
    throw ConfigError("wind curve: require 0 < cut_in < rated_speed < cut_out");
}

double wind_power(const WindTurbineCurve& c, double v) {
  if (v < c.cut_in || v > c.cut_out) return 0.0;
  if (v >= c.rated_speed) return c.rated_power;
  const double vi3 = c.cut_in * c.cut_in * c.cut_in;
  const double vr3 = c.rated_speed * c.rated_speed * c.rated_speed;
  return c.rated_power * (v * v * v - vi3) / (vr3 - vi3);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    while (!field.empty() && field.front() == ' ') field.erase(field.begin());
    if (field.size() >= 2 && field.front() == '"' && field.back() == '"') field = field.substr(1, field.size() - 2);
    out.push_back(field);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

MarginalSpec load_empirical(const std::filesystem::path& path, const std::string& column) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open CSV file '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("CSV file '" + path.string() + "' has no header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split_csv_line(line);
  const auto it = std::find(header.begin(), header.end(), column);
  if (it == header.end()) throw ConfigError("CSV file '" + path.string() + "' has no column '" + column + "'");
  const auto col = static_cast<std::size_t>(it - header.begin());

  std::vector<double> values;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (col >= fields.size())
      throw ConfigError("CSV line " + std::to_string(lineno) + ": missing column '" + column + "'");
    const auto& f = fields[col];
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v))
      throw ConfigError("CSV line " + std::to_string(lineno) + ": non-numeric value '" + f + "' in column '" + column +
                        "'");
    values.push_back(v);
  }
  if (values.empty()) throw ConfigError("CSV column '" + column + "' is empty");
  return empirical(column, std::move(values));
}

}  // namespace alk
