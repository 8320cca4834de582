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
#include <numeric>
#include <random>

#include <doctest.h>

#include "alk/error.hpp"
#include "alk/evaluation.hpp"

TEST_CASE("confusion examples") {
  const std::vector<double> pred{-1, 1, -2, 3};
  const std::vector<std::uint8_t> truth{1, 0, 1, 0};
  auto c = alk::confusion(pred, truth);
  CHECK(c.tp == 2);
  CHECK(c.tn == 2);
  CHECK(c.tpr == 1.0);
  CHECK(c.fdr == 0.0);
  CHECK_FALSE(c.fdr_undefined);

  c = alk::confusion(std::vector<double>{1, 1, 1}, std::vector<std::uint8_t>{1, 0, 1});
  CHECK(c.tpr == 0.0);
  CHECK(c.fdr == 0.0);
  CHECK(c.fdr_undefined);
  CHECK_FALSE(c.tpr_undefined);

  // TP = 9, FN = 1, FP = 1
  std::vector<double> p(20, 1.0);
  std::vector<std::uint8_t> t(20, 0);
  for (int i = 0; i < 9; ++i) p[static_cast<std::size_t>(i)] = -1, t[static_cast<std::size_t>(i)] = 1;
  t[9] = 1;
  p[10] = -1;
  c = alk::confusion(p, t);
  CHECK(c.tp == 9);
  CHECK(c.fn == 1);
  CHECK(c.fp == 1);
  CHECK(c.tpr == doctest::Approx(0.9));
  CHECK(c.fdr == doctest::Approx(0.1));
  CHECK(c.total() == 20);

  CHECK_THROWS_AS(alk::confusion(std::vector<double>{1}, std::vector<std::uint8_t>{}), alk::ConfigError);
  // exact zero predicts stable
  CHECK(alk::confusion(std::vector<double>{0.0}, std::vector<std::uint8_t>{0}).tn == 1);
}

TEST_CASE("confusion is invariant to joint permutation and consistent with estimate_pf") {
  std::mt19937_64 g(3);
  std::normal_distribution<double> z;
  std::vector<double> p(500);
  std::vector<std::uint8_t> t(500);
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = z(g);
    t[i] = (p[i] + 0.5 * z(g)) < -1.0 ? 1 : 0;
  }
  const auto c = alk::confusion(p, t);
  std::vector<std::size_t> idx(p.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), g);
  std::vector<double> p2;
  std::vector<std::uint8_t> t2;
  for (auto i : idx) {
    p2.push_back(p[i]);
    t2.push_back(t[i]);
  }
  CHECK(alk::confusion(p2, t2) == c);
  CHECK(alk::estimate_pf(p) == static_cast<double>(c.tp + c.fp) / 500.0);
}

TEST_CASE("cov_pf") {
  CHECK(alk::cov_pf(0.01, 100000) == doctest::Approx(0.031464).epsilon(1e-4));
  CHECK(alk::cov_pf(0.01, 100000) < 0.05);
  CHECK(alk::cov_pf(0.5, 4) == doctest::Approx(0.5));
  CHECK(alk::cov_pf(0.3, 1000000000) < 1e-3);
  CHECK_THROWS_AS(alk::cov_pf(0.0, 10), alk::ConfigError);
  CHECK_THROWS_AS(alk::cov_pf(1.0, 10), alk::ConfigError);
}

TEST_CASE("direct_mcs") {
  alk::UncertaintySpec s;
  s.dims.push_back(alk::gaussian("x", 0.0, 1.0));
  s.seed = 4;
  const auto pool = alk::mc_sample(s, 1001).values;
  const alk::FunctionEvaluator pos(1, [](std::span<const double>) { return 1.0; });
  CHECK(alk::direct_mcs(pos, pool, 1).pf_ref == 0.0);

  std::vector<double> v(pool.data(), pool.data() + pool.size());
  std::sort(v.begin(), v.end());
  const double median = v[500];
  const alk::FunctionEvaluator lin(1, [median](std::span<const double> x) { return x[0] - median; });
  const auto r = alk::direct_mcs(lin, pool, 2);
  CHECK(r.pf_ref == doctest::Approx(500.0 / 1001.0));
  const auto c = alk::confusion(r.margins, r.labels);
  CHECK(r.pf_ref == static_cast<double>(c.tp + c.fn) / 1001.0);

  const auto back = alk::McsResult::from_labels_csv(r.labels_csv());
  CHECK(back.labels == r.labels);
  CHECK(back.margins == r.margins);
  CHECK(back.pf_ref == r.pf_ref);

  const alk::FunctionEvaluator failing(1, [](std::span<const double> x) {
    if (x[0] > 2.0) throw alk::EvaluationError("diverged");
    return 1.0;
  });
  CHECK_THROWS_AS(alk::direct_mcs(failing, pool, 1), alk::EvaluationError);
  const auto tolerant = alk::direct_mcs(failing, pool, 1, alk::FailurePolicy::Unstable);
  CHECK(tolerant.failures > 0);
  CHECK(tolerant.pf_ref == static_cast<double>(tolerant.failures) / 1001.0);
  CHECK(alk::McsResult::from_labels_csv(tolerant.labels_csv()).failures == tolerant.failures);
  CHECK_THROWS_AS(alk::McsResult::from_labels_csv("bad\n"), alk::ConfigError);
}

TEST_CASE("baseline kriging on a linear 1-D margin") {
  alk::UncertaintySpec s;
  s.dims.push_back(alk::gaussian("x", 0.0, 1.0));
  s.seed = 9;
  const alk::FunctionEvaluator lin(1, [](std::span<const double> x) { return 1.8 - x[0]; });
  auto ps = s;
  ps.seed = 10;
  const auto pool = alk::mc_sample(ps, 20000).values;
  const auto truth = alk::direct_mcs(lin, pool, 1);
  alk::FitConfig f;
  f.population = 10;
  f.generations = 10;
  auto b = alk::baseline_kriging("lin", s, lin, 20, f, pool, 1);
  alk::attach_reference(b.report, {b.pool_mean.data(), static_cast<std::size_t>(b.pool_mean.size())}, truth);
  REQUIRE(b.report.metrics);
  CHECK(b.report.metrics->tpr == 1.0);
  CHECK(b.report.metrics->fdr == 0.0);
  CHECK(b.report.n_total == 20);
  const auto again = alk::baseline_kriging("lin", s, lin, 20, f, pool, 1);
  CHECK(again.report.pf_hat == b.report.pf_hat);
  CHECK(again.model == b.model);
  CHECK_THROWS_AS(alk::baseline_kriging("lin", s, lin, 1, f, pool, 1), alk::ConfigError);
}

TEST_CASE("analytic suite references") {
  const auto suite = alk::analytic_suite();
  REQUIRE(suite.size() >= 3);
  for (const auto& a : suite) {
    CHECK(a.reference_pf > 0.0);
    CHECK(a.reference_pf < 1.0);
    CHECK(a.evaluator->dimension() == a.dimension);
  }
  // four-branch brute force with the stored seed
  const auto fb = alk::make_analytic("four_branch");
  CHECK(alk::brute_force_pf(fb, fb.reference_samples, fb.reference_seed) == fb.reference_pf);
  CHECK(fb.reference_pf == doctest::Approx(0.004449));

  const auto lin = alk::make_analytic("linear", {3, 1e-2});
  CHECK(*lin.closed_form == doctest::Approx(1e-2).epsilon(1e-12));
  const double p_lin = alk::brute_force_pf(lin, 1000000, 77);
  CHECK(std::abs(p_lin - 1e-2) < 4.0 * std::sqrt(1e-2 * 0.99 / 1e6));

  const auto quad = alk::make_analytic("quadratic", {2, 1e-2});
  CHECK(*quad.closed_form == doctest::Approx(1e-2).epsilon(1e-10));
  const double p_quad = alk::brute_force_pf(quad, 1000000, 78);
  CHECK(std::abs(p_quad - 1e-2) < 4.0 * std::sqrt(1e-2 * 0.99 / 1e6));
  // symmetric under x -> -x
  const std::vector<double> a{1.2, -2.5}, b{-1.2, 2.5};
  CHECK(quad.evaluator->margin(a) == quad.evaluator->margin(b));
  // chi-square with two degrees of freedom has tail exp(-c/2)
  CHECK(quad.evaluator->margin(std::vector<double>{0.0, 0.0}) == doctest::Approx(-2.0 * std::log(1e-2)));

  const auto ser = alk::make_analytic("series", {4, 1e-2});
  CHECK(*ser.closed_form == doctest::Approx(1e-2).epsilon(1e-12));
  const double p_ser = alk::brute_force_pf(ser, 1000000, 79);
  CHECK(std::abs(p_ser - 1e-2) < 4.0 * std::sqrt(1e-2 * 0.99 / 1e6));

  CHECK_THROWS_AS(alk::make_analytic("nope"), alk::ConfigError);
  CHECK_THROWS_AS(alk::make_analytic("linear", {2, 1.5}), alk::ConfigError);
}

TEST_CASE("report JSON round trip and CSV layout") {
  alk::PfReport r;
  r.experiment = "x";
  r.method = "al-kriging";
  r.pf_hat = 0.0123;
  r.pf_ref = 0.0119;
  r.metrics = alk::confusion(std::vector<double>{-1, 1}, std::vector<std::uint8_t>{1, 1});
  r.n_v = 2;
  r.n_total = 70;
  r.n_initial = 50;
  r.l_total = 3;
  r.stop_reason = "criterion met";
  r.theta = {0.5, 1.25};
  r.pf_history = {0.5, 0.5, 0.5};
  r.timing = {1.0, 2.0, 3.5};
  const auto back = alk::PfReport::from_json(r.to_json());
  CHECK(back == r);
  CHECK(back.to_json() == r.to_json());
  CHECK(r.to_json().find("t_total") == std::string::npos);
  const auto header = alk::PfReport::csv_header();
  const auto row = r.csv_row();
  CHECK(std::count(header.begin(), header.end(), ',') == std::count(row.begin(), row.end(), ','));
  CHECK(row.substr(row.rfind(',') + 1) == "3.5");
}
