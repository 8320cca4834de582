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

#include "alk/powersim.hpp"

namespace alk {

GridCase builtin_smib() {
  GridCase c;
  c.name = "smib";
  c.frequency = 60.0;
  c.base_mva = 100.0;
  c.buses = {
      {1, BusType::PV, 1.0, 0.0, 0.8},
      {2, BusType::Slack, 1.0, 0.0, 0.0},
  };
  c.lines = {
      {"L1", 1, 2, 0.0, 0.4, 0.0, true},
      {"L2", 1, 2, 0.0, 0.4, 0.0, true},
  };
  c.machines = {
      {1, 5.0, 0.3, 0.0, false},
      {2, 0.0, 0.0, 0.0, true},
  };
  c.contingencies = {{"F1", 1, "L2", 0.1, 0.2, 12.0}};
  return c;
}

// WSCC 3-machine 9-bus system, classical machine data.
GridCase builtin_ieee9() {
  GridCase c;
  c.name = "ieee9";
  c.frequency = 60.0;
  c.base_mva = 100.0;
  c.buses = {
      {1, BusType::Slack, 1.04, 0.0, 0.0}, {2, BusType::PV, 1.025, 0.0, 1.63}, {3, BusType::PV, 1.025, 0.0, 0.85},
      {4, BusType::PQ, 1.0, 0.0, 0.0},     {5, BusType::PQ, 1.0, 0.0, 0.0},    {6, BusType::PQ, 1.0, 0.0, 0.0},
      {7, BusType::PQ, 1.0, 0.0, 0.0},     {8, BusType::PQ, 1.0, 0.0, 0.0},    {9, BusType::PQ, 1.0, 0.0, 0.0},
  };
  c.lines = {
      {"1-4", 1, 4, 0.0, 0.0576, 0.0, true},       {"4-5", 4, 5, 0.010, 0.085, 0.176, true},
      {"4-6", 4, 6, 0.017, 0.092, 0.158, true},    {"5-7", 5, 7, 0.032, 0.161, 0.306, true},
      {"6-9", 6, 9, 0.039, 0.170, 0.358, true},    {"7-8", 7, 8, 0.0085, 0.072, 0.149, true},
      {"8-9", 8, 9, 0.0119, 0.1008, 0.209, true},  {"2-7", 2, 7, 0.0, 0.0625, 0.0, true},
      {"3-9", 3, 9, 0.0, 0.0586, 0.0, true},
  };
  c.machines = {
      {1, 23.64, 0.0608, 0.0, false},
      {2, 6.4, 0.1198, 0.0, false},
      {3, 3.01, 0.1813, 0.0, false},
  };
  c.loads = {{5, 1.25, 0.5}, {6, 0.9, 0.3}, {8, 1.0, 0.35}};

  WindTurbineCurve ge15{1.5, 3.0, 12.0, 25.0};
  c.injections = {
      {0, InjectionKind::LoadScale, 0, 1.0, {}},
      {1, InjectionKind::LoadScale, 1, 1.0, {}},
      {2, InjectionKind::LoadScale, 2, 1.0, {}},
      {3, InjectionKind::Wind, 5, 40.0, ge15},
      {4, InjectionKind::Wind, 6, 40.0, ge15},
  };

  UncertaintySpec u;
  u.dims = {gaussian("load5", 1.0, 0.05), gaussian("load6", 1.0, 0.05), gaussian("load8", 1.0, 0.05),
            weibull("wind5", 11.2, 2.2), weibull("wind6", 11.2, 2.2)};
  u.groups = {{{0, 1, 2}, 0.4}, {{3, 4}, 0.8}};
  c.uncertainty = u;

  c.contingencies = {{"F7", 7, "5-7", 0.1, 0.092, 12.0}};
  return c;
}

}  // namespace alk
