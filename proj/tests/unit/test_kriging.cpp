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
#include <random>

#include <Eigen/Dense>
#include <doctest.h>

#include "alk/error.hpp"
#include "alk/kriging.hpp"
#include "support/dense_oracle.hpp"

using alk::KrigingModel;
using alk::testing::DenseOracle;
using alk::testing::random_data;

TEST_CASE("matern52 reference values") {
  const std::vector<double> th{0.7}, a{0.3}, b{1.0};
  CHECK(alk::matern52(a, a, th) == 1.0);
  CHECK(alk::matern52(a, b, th) == doctest::Approx((1 + std::sqrt(5.0) + 5.0 / 3.0) * std::exp(-std::sqrt(5.0))));
  CHECK(alk::matern52(a, b, th) == doctest::Approx(0.5240).epsilon(1e-4));
  CHECK(alk::matern52(a, b, th) == alk::matern52(b, a, th));
  const std::vector<double> th2{1.0, 2.0}, p{0, 0}, q{0.6, 1.6};
  CHECK(alk::matern52(p, q, th2) == doctest::Approx(alk::matern52_from_sq(0.36 + 0.64)));
}

TEST_CASE("predictor matches dense-solve algebra on random datasets") {
  for (unsigned seed = 1; seed <= 8; ++seed) {
    const int n = 5 + static_cast<int>(seed * 2 % 16);
    const int m = 1 + static_cast<int>(seed % 3);
    const auto d = random_data(n, m, seed);
    std::vector<double> th;
    for (int k = 0; k < m; ++k) th.push_back(0.6 + 0.3 * k);
    th = alk::testing::conditioned_theta(d, th);
    const auto model = KrigingModel::build(d.x, d.t, th);
    const DenseOracle oracle(d, th, model.nugget());
    CHECK(model.process_variance() == doctest::Approx(oracle.process_variance()).epsilon(1e-9));
    std::mt19937_64 g(seed + 100);
    std::uniform_real_distribution<double> u(-2.5, 2.5);
    for (int k = 0; k < 5; ++k) {
      Eigen::VectorXd p(m);
      for (int j = 0; j < m; ++j) p(j) = u(g);
      const auto [mean, var] = oracle.predict(p);
      const std::vector<double> pv(p.data(), p.data() + m);
      CHECK(std::abs(model.predict_mean(pv) - mean) <= 1e-10 * std::max(1.0, std::abs(mean)));
      CHECK(std::abs(model.predict_variance(pv) - var) <= 1e-10 * std::max(1.0, var));
    }
  }
}

TEST_CASE("interpolation at training points") {
  for (unsigned seed = 11; seed <= 14; ++seed) {
    const auto d = random_data(12, 2, seed);
    const auto model = KrigingModel::build(d.x, d.t, std::vector<double>{0.8, 1.1});
    const auto pred = model.predict(d.x);
    for (int i = 0; i < d.x.rows(); ++i) {
      CHECK(std::abs(pred.mean(i) - d.t(i)) < 1e-6 * model.output_scale());
      CHECK(pred.variance(i) <= model.nugget() * model.process_variance());
      CHECK(pred.variance(i) >= 0.0);
    }
  }
}

TEST_CASE("far-field limits") {
  const auto d = random_data(8, 1, 3);
  const auto model = KrigingModel::build(d.x, d.t, std::vector<double>{0.5});
  const std::vector<double> far{1e6};
  CHECK(model.predict_mean(far) == doctest::Approx(model.beta()).epsilon(1e-12));
  // sigma^2 (1 + 1/Q), Q = 1'R^-1 1 on the standardized model
  const DenseOracle o(d, {0.5}, model.nugget());
  const DenseOracle::Vec one = DenseOracle::Vec::Ones(8);
  const auto q = static_cast<double>(one.dot(Eigen::FullPivLU<DenseOracle::Mat>(o.big_r(o.xs)).solve(one)));
  CHECK(model.predict_variance(far) == doctest::Approx(model.process_variance() * (1 + 1 / q)).epsilon(1e-9));
}

TEST_CASE("two-point model against hand algebra") {
  // R = [[1, r], [r, 1]] with nugget; beta = (t1 + t2) / 2 by symmetry of 1'R^-1.
  Eigen::MatrixXd x(2, 1);
  x << 0.0, 1.0;
  Eigen::VectorXd t(2);
  t << 3.0, 5.0;
  const auto model = KrigingModel::build(x, t, std::vector<double>{1.0}, 0.0, 0.0);
  CHECK(model.beta() == doctest::Approx(4.0).epsilon(1e-14));
  // standardized inputs are +-1, distance 2 / theta = 2
  const double r = alk::matern52_from_sq(4.0);
  const std::vector<double> mid{0.5};
  // at the midpoint r0 = (c, c): mean = beta + c (1, 1) R^-1 (t - beta) = beta because t - beta = (-1, 1)
  CHECK(model.predict_mean(mid) == doctest::Approx(4.0).epsilon(1e-14));
  const double c = alk::matern52_from_sq(1.0);
  const double q = 2.0 / (1.0 + r);
  const double rr = 2.0 * c * c / (1.0 + r);
  const double u = 1.0 - 2.0 * c / (1.0 + r);
  // Standardized outputs are -1 and 1. Each LOO model holds one point, so the
  // residual is 2 and the normalized variance is 1 - r^2 + (1 - r)^2.
  const double c_loo = 1.0 - r * r + (1.0 - r) * (1.0 - r);
  const double sigma2_std = 4.0 / c_loo;  // output scale is 1
  CHECK(model.process_variance() == doctest::Approx(sigma2_std).epsilon(1e-12));
  CHECK(model.predict_variance(mid) == doctest::Approx(sigma2_std * (1 - rr + u * u / q)).epsilon(1e-12));
}

TEST_CASE("closed-form LOO matches literal refit") {
  for (unsigned seed = 21; seed <= 25; ++seed) {
    const auto d = random_data(3 + static_cast<int>(seed % 5) * 3, 2, seed);
    const std::vector<double> th{0.9, 1.3};
    const auto all = alk::loo_all(d.x, d.t, th, 1e-8);
    for (Eigen::Index i = 0; i < d.x.rows(); ++i) {
      const auto p = alk::loo_refit(d.x, d.t, th, static_cast<std::size_t>(i), 1e-8);
      CHECK(all.mean(i) == doctest::Approx(p.mean).epsilon(1e-8));
      CHECK(all.normalized_variance(i) == doctest::Approx(p.normalized_variance).epsilon(1e-8));
    }
  }
  Eigen::MatrixXd x(3, 1);
  x << 0.0, 1.0, 2.0;
  Eigen::VectorXd t = Eigen::VectorXd::Constant(3, 2.5);
  const auto all = alk::loo_all(x, t, std::vector<double>{1.0}, 1e-8);
  CHECK(all.sse == doctest::Approx(0.0));
  CHECK(all.mean(1) == doctest::Approx(2.5));
  // symmetric design and outputs: mirrored residuals
  Eigen::VectorXd ts(3);
  ts << 1.0, 0.0, 1.0;
  const auto sym = alk::loo_all(x, ts, std::vector<double>{1.0}, 1e-8);
  CHECK(sym.mean(0) == doctest::Approx(sym.mean(2)).epsilon(1e-12));
  CHECK_THROWS_AS(alk::loo_refit(x.topRows(2), ts.head(2), std::vector<double>{1.0}, 0, 1e-8), alk::ConfigError);
}

TEST_CASE("affine in observations, variance independent of them") {
  const auto d1 = random_data(10, 2, 31);
  auto d2 = d1;
  std::mt19937_64 g(5);
  std::normal_distribution<double> z;
  for (int i = 0; i < d2.t.size(); ++i) d2.t(i) = z(g);
  const std::vector<double> th{0.7, 0.9};
  const auto m1 = KrigingModel::build(d1.x, d1.t, th);
  const auto m2 = KrigingModel::build(d1.x, d2.t, th);
  const auto m12 = KrigingModel::build(d1.x, d1.t + d2.t, th);
  const auto shifted = KrigingModel::build(d1.x, (d1.t.array() + 7.5).matrix(), th);
  Eigen::VectorXd perm = d1.t.reverse();
  const auto mp = KrigingModel::build(d1.x, perm, th);
  const std::vector<double> p{0.3, -1.1};
  CHECK(m12.predict_mean(p) == doctest::Approx(m1.predict_mean(p) + m2.predict_mean(p)).epsilon(1e-10));
  CHECK(shifted.predict_mean(p) == doctest::Approx(m1.predict_mean(p) + 7.5).epsilon(1e-12));
  // outputs enter the variance only through sigma^2
  CHECK(mp.predict_variance(p) / mp.process_variance() ==
        doctest::Approx(m1.predict_variance(p) / m1.process_variance()).epsilon(1e-12));
}

TEST_CASE("fit: constant outputs, determinism, optimizer sanity") {
  const auto d = random_data(15, 2, 41);
  const Eigen::VectorXd c = Eigen::VectorXd::Constant(15, -0.25);
  alk::FitConfig cfg;
  cfg.population = 8;
  cfg.generations = 5;
  cfg.seed = 3;
  const auto fc = alk::fit(d.x, c, cfg);
  CHECK(fc.model.beta() == doctest::Approx(-0.25));
  CHECK(fc.model.predict_mean(std::vector<double>{9.0, -3.0}) == doctest::Approx(-0.25));
  CHECK(fc.objective == doctest::Approx(0.0));
  CHECK(fc.model.process_variance() > 0.0);

  const auto a = alk::fit(d.x, d.t, cfg);
  const auto b = alk::fit(d.x, d.t, cfg);
  CHECK(a.model.theta() == b.model.theta());
  CHECK(a.model == b.model);
  CHECK(a.objective <= a.best_population_objective);
  CHECK(a.objective == doctest::Approx(alk::loo_objective(d.x, d.t, a.model.theta())).epsilon(1e-12));
  for (double th : a.model.theta()) {
    CHECK(th >= 1e-2);
    CHECK(th <= 1e2);
  }
  cfg.warm_start = a.model.theta();
  CHECK(alk::fit(d.x, d.t, cfg).objective <= a.objective + 1e-12);
}

TEST_CASE("fit input validation") {
  const auto d = random_data(9, 1, 2);
  CHECK_THROWS_AS(alk::fit(d.x, d.t, {}), alk::ConfigError);  // fewer than 10 samples
  alk::FitConfig bad;
  bad.population = 3;
  const auto e = random_data(12, 1, 2);
  CHECK_THROWS_AS(alk::fit(e.x, e.t, bad), alk::ConfigError);
  bad = {};
  bad.theta_lo = {1.0, 2.0};
  CHECK_THROWS_AS(alk::fit(e.x, e.t, bad), alk::ConfigError);
  CHECK_THROWS_AS(KrigingModel::build(e.x, e.t, std::vector<double>{-1.0}), alk::ConfigError);
}

TEST_CASE("nugget escalation on near-duplicate rows") {
  Eigen::MatrixXd x(4, 1);
  x << 0.0, 1e-9, 1.0, 2.0;
  Eigen::VectorXd t(4);
  t << 0.0, 0.1, 1.0, 0.5;
  const auto m = KrigingModel::build(x, t, std::vector<double>{5.0});
  CHECK(m.nugget() >= 1e-8);
  CHECK(m.nugget() <= 1e-4);
  CHECK_THROWS_AS(KrigingModel::build(x, t, std::vector<double>{5.0}, 0.0, 0.0), alk::NumericalError);
}

TEST_CASE("model JSON round trip") {
  const auto d = random_data(14, 3, 51);
  const auto m = KrigingModel::build(d.x, d.t, std::vector<double>{0.5, 1.0, 2.0});
  const auto back = KrigingModel::from_json(m.to_json());
  CHECK(back == m);
  CHECK(back.to_json() == m.to_json());
  const auto pm = m.predict(d.x * 0.9), pb = back.predict(d.x * 0.9);
  CHECK((pm.mean - pb.mean).cwiseAbs().maxCoeff() == 0.0);
  CHECK((pm.variance - pb.variance).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(KrigingModel::from_json("{\"schema\": \"other\"}"), alk::ConfigError);
}

TEST_CASE("batched prediction equals pointwise prediction") {
  const auto d = random_data(20, 2, 61);
  const auto m = KrigingModel::build(d.x, d.t, std::vector<double>{0.5, 0.8});
  const Eigen::MatrixXd p = Eigen::MatrixXd::Random(2500, 2) * 2.0;
  const auto batch = m.predict(p);
  for (int i : {0, 1023, 1024, 2499}) {
    const std::vector<double> r{p(i, 0), p(i, 1)};
    CHECK(batch.mean(i) == doctest::Approx(m.predict_mean(r)).epsilon(1e-13));
    CHECK(batch.variance(i) == doctest::Approx(m.predict_variance(r)).epsilon(1e-11));
  }
}
