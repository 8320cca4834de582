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

#include <vector>

#include <benchmark/benchmark.h>

#include "alk/active_learning.hpp"
#include "alk/evaluation.hpp"
#include "alk/kriging.hpp"
#include "alk/powersim.hpp"
#include "alk/sampling.hpp"

namespace {

struct Training {
  Eigen::MatrixXd x;
  Eigen::VectorXd t;
};

Training four_branch_design(std::size_t n) {
  const auto a = alk::make_analytic("four_branch");
  auto spec = a.uncertainty();
  spec.seed = 17;
  Training d{alk::lhs_sample(spec, n).values, Eigen::VectorXd(static_cast<Eigen::Index>(n))};
  for (Eigen::Index i = 0; i < d.x.rows(); ++i) {
    const Eigen::VectorXd row = d.x.row(i).transpose();
    d.t(i) = a.evaluator->margin({row.data(), static_cast<std::size_t>(row.size())});
  }
  return d;
}

void BM_Fit(benchmark::State& state) {
  const auto d = four_branch_design(static_cast<std::size_t>(state.range(0)));
  alk::FitConfig cfg;
  cfg.seed = 3;
  for (auto _ : state) benchmark::DoNotOptimize(alk::fit(d.x, d.t, cfg));
}
BENCHMARK(BM_Fit)->Arg(50)->Arg(150)->Unit(benchmark::kMillisecond);

void BM_PredictPool(benchmark::State& state) {
  const auto d = four_branch_design(150);
  const std::vector<double> theta{0.5, 0.5};
  const auto model = alk::KrigingModel::build(d.x, d.t, theta);
  auto spec = alk::make_analytic("four_branch").uncertainty();
  spec.seed = 18;
  const auto pool = alk::mc_sample(spec, static_cast<std::size_t>(state.range(0))).values;
  for (auto _ : state) benchmark::DoNotOptimize(model.predict(pool));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PredictPool)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_Simulate9Bus(benchmark::State& state) {
  const auto c = alk::builtin_ieee9();
  const auto x = c.uncertainty->nominal();
  const auto ctg = c.contingency("F7");
  alk::SimulationOptions opt;
  opt.record = false;
  opt.early_exit = false;
  for (auto _ : state) benchmark::DoNotOptimize(alk::simulate(c, {x.data(), static_cast<std::size_t>(x.size())}, ctg, opt));
}
BENCHMARK(BM_Simulate9Bus)->Unit(benchmark::kMillisecond);

void BM_Cct9Bus(benchmark::State& state) {
  const auto c = alk::builtin_ieee9();
  const auto x = c.uncertainty->nominal();
  const auto ctg = c.contingency("F7");
  const alk::CctSearch search{0.0, 0.512, 1e-3};
  for (auto _ : state) benchmark::DoNotOptimize(alk::compute_cct(c, {x.data(), static_cast<std::size_t>(x.size())}, ctg, search));
}
BENCHMARK(BM_Cct9Bus)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
