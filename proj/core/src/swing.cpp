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
#include <numbers>

#include "alk/error.hpp"
#include "alk/powersim.hpp"

namespace alk {

SwingSystem::SwingSystem(Eigen::VectorXd emf, Eigen::VectorXd p_mech, Eigen::VectorXd h, Eigen::VectorXd damping,
                         std::vector<bool> fixed, double omega_s)
    : emf_(std::move(emf)),
      p_mech_(std::move(p_mech)),
      h_(std::move(h)),
      damping_(std::move(damping)),
      fixed_(std::move(fixed)),
      omega_s_(omega_s) {
  const auto n = emf_.size();
  if (p_mech_.size() != n || h_.size() != n || damping_.size() != n || static_cast<Eigen::Index>(fixed_.size()) != n)
    throw ConfigError("SwingSystem: inconsistent machine data sizes");
  for (Eigen::Index i = 0; i < n; ++i)
    if (!fixed_[static_cast<std::size_t>(i)] && !(h_(i) > 0.0)) throw ConfigError("SwingSystem: H must be positive");
  g_ = Eigen::MatrixXd::Zero(n, n);
  b_ = Eigen::MatrixXd::Zero(n, n);
  inv_2h_ = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i)
    if (!fixed_[static_cast<std::size_t>(i)]) inv_2h_(i) = 1.0 / (2.0 * h_(i));
  for (auto* v : {&sin_, &cos_, &ec_, &es_, &pe_}) v->resize(n);
  for (auto* v : {&k1_, &k2_, &k3_, &k4_, &tmp_}) v->resize(2 * n);
}

void SwingSystem::set_network(const Eigen::MatrixXcd& y) {
  if (y.rows() != emf_.size() || y.cols() != emf_.size()) throw ConfigError("SwingSystem: network size mismatch");
  g_ = y.real();
  b_ = y.imag();
}

Eigen::VectorXd SwingSystem::electrical_power(const Eigen::VectorXd& delta) const {
  Eigen::VectorXd pe(emf_.size());
  power_into(delta.data(), pe.data());
  return pe;
}

// Pe_i = E_i (cos(d_i) a_i + sin(d_i) b_i) with a = G ec - B es, b = G es + B ec.
void SwingSystem::power_into(const double* delta, double* pe) const {
  const auto n = emf_.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    sin_(i) = std::sin(delta[i]);
    cos_(i) = std::cos(delta[i]);
    ec_(i) = emf_(i) * cos_(i);
    es_(i) = emf_(i) * sin_(i);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    double a = 0.0, b = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      a += g_(i, j) * ec_(j) - b_(i, j) * es_(j);
      b += g_(i, j) * es_(j) + b_(i, j) * ec_(j);
    }
    pe[i] = emf_(i) * (cos_(i) * a + sin_(i) * b);
  }
}

void SwingSystem::derivative(const Eigen::VectorXd& state, Eigen::VectorXd& out) const {
  const auto n = emf_.size();
  out.resize(2 * n);
  power_into(state.data(), pe_.data());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (fixed_[static_cast<std::size_t>(i)]) {
      out(i) = 0.0;
      out(n + i) = 0.0;
      continue;
    }
    const double dw = state(n + i);
    out(i) = omega_s_ * dw;
    out(n + i) = (p_mech_(i) - pe_(i) - damping_(i) * dw) * inv_2h_(i);
  }
}

void SwingSystem::rk4_step(Eigen::VectorXd& s, double h) const {
  derivative(s, k1_);
  tmp_.noalias() = s + 0.5 * h * k1_;
  derivative(tmp_, k2_);
  tmp_.noalias() = s + 0.5 * h * k2_;
  derivative(tmp_, k3_);
  tmp_.noalias() = s + h * k3_;
  derivative(tmp_, k4_);
  s.noalias() += (h / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
}

namespace {

// Pre-fault state plus the three reduced networks, reused across the many
// simulations of a clearing-time bisection.
struct PreparedRun {
  SwingSystem system;
  Eigen::MatrixXcd pre, fault, post;
  Eigen::VectorXd delta0;

  PreparedRun(const GridCase& c, const OperatingPoint& op, const Contingency& ctg)
      : system(make_system(c, op)),
        pre(reduced_admittance(c, op, ctg, NetworkPhase::PreFault)),
        fault(reduced_admittance(c, op, ctg, NetworkPhase::FaultOn)),
        post(reduced_admittance(c, op, ctg, NetworkPhase::PostFault)),
        delta0(op.delta0) {}

  static SwingSystem make_system(const GridCase& c, const OperatingPoint& op) {
    const auto n = static_cast<Eigen::Index>(c.machines.size());
    Eigen::VectorXd h(n), d(n);
    std::vector<bool> fixed(c.machines.size());
    for (Eigen::Index k = 0; k < n; ++k) {
      const auto& m = c.machines[static_cast<std::size_t>(k)];
      h(k) = m.h;
      d(k) = m.damping;
      fixed[static_cast<std::size_t>(k)] = m.infinite_bus;
    }
    return SwingSystem(op.emf, op.p_mech, h, d, std::move(fixed), 2.0 * std::numbers::pi * c.frequency);
  }

  TrajectoryResult run(double t_on, double t_fct, double t_end, const SimulationOptions& opt) {
    const auto n = delta0.size();
    Eigen::VectorXd state(2 * n);
    state.head(n) = delta0;
    state.tail(n).setZero();

    TrajectoryResult out;
    auto observe = [&](double t) {
      const double spread = state.head(n).maxCoeff() - state.head(n).minCoeff();
      if (!state.allFinite()) {
        out.blew_up = true;
        out.stable = false;
      } else {
        out.peak_angle_difference = std::max(out.peak_angle_difference, spread);
        if (spread > opt.angle_threshold) out.stable = false;
      }
      if (opt.record) {
        out.time.push_back(t);
        out.delta.push_back(state.head(n));
        out.speed.push_back(state.tail(n));
        out.max_angle_difference.push_back(spread);
      }
    };
    observe(0.0);

    struct Phase {
      const Eigen::MatrixXcd* y;
      double start, end;
    };
    const Phase phases[] = {{&pre, 0.0, t_on}, {&fault, t_on, t_on + t_fct}, {&post, t_on + t_fct, t_end}};
    for (const auto& ph : phases) {
      const double dur = ph.end - ph.start;
      if (dur <= 0.0) continue;
      system.set_network(*ph.y);
      // Steps land exactly on the switching instants.
      const auto steps = static_cast<long>(std::ceil(dur / opt.step - 1e-9));
      const double h = dur / static_cast<double>(steps);
      for (long k = 1; k <= steps; ++k) {
        system.rk4_step(state, h);
        observe(ph.start + static_cast<double>(k) * h);
        if (out.blew_up || (!out.stable && opt.early_exit)) return out;
      }
    }
    return out;
  }
};

void check_contingency_times(const Contingency& ctg, double t_fct) {
  if (!(ctg.sim_duration > ctg.t_fault_on + t_fct))
    throw ConfigError("contingency '" + ctg.name + "': simulation horizon must exceed fault-on time plus clearing time");
}

}  // namespace

TrajectoryResult simulate(const GridCase& c, const OperatingPoint& op, const Contingency& ctg,
                          const SimulationOptions& opt) {
  c.validate(ctg);
  check_contingency_times(ctg, ctg.t_fct);
  if (!(opt.step > 0.0)) throw ConfigError("simulation step must be positive");
  PreparedRun run(c, op, ctg);
  return run.run(ctg.t_fault_on, ctg.t_fct, ctg.sim_duration, opt);
}

TrajectoryResult simulate(const GridCase& c, std::span<const double> x, const Contingency& ctg,
                          const SimulationOptions& opt) {
  return simulate(c, solve_prefault(c, x), ctg, opt);
}

CctResult compute_cct(const GridCase& c, std::span<const double> x, const Contingency& ctg, const CctSearch& search,
                      const SimulationOptions& opt) {
  c.validate(ctg);
  if (!(search.tol > 0.0)) throw ConfigError("CCT search tolerance must be positive");
  if (!(search.lo >= 0.0 && search.hi >= search.lo)) throw ConfigError("CCT search bracket must satisfy 0 <= lo <= hi");
  check_contingency_times(ctg, search.hi);
  if (!(opt.step > 0.0)) throw ConfigError("simulation step must be positive");

  const OperatingPoint op = solve_prefault(c, x);
  PreparedRun run(c, op, ctg);
  SimulationOptions fast = opt;
  fast.record = false;
  fast.early_exit = true;

  CctResult res;
  auto stable_at = [&](double t_fct) {
    ++res.simulations;
    return run.run(ctg.t_fault_on, t_fct, ctg.sim_duration, fast).stable;
  };

  if (search.lo == search.hi) {
    res.cct = search.lo;
    return res;
  }
  if (!stable_at(search.lo)) {
    res.cct = search.lo;
    res.censored_unstable = true;
    return res;
  }
  if (stable_at(search.hi)) {
    res.cct = search.hi;
    res.censored_stable = true;
    return res;
  }
  double a = search.lo, b = search.hi;  // stable at a, unstable at b
  while (b - a > 2.0 * search.tol) {
    const double mid = 0.5 * (a + b);
    (stable_at(mid) ? a : b) = mid;
  }
  res.cct = 0.5 * (a + b);
  return res;
}

TsmResult tsm(const GridCase& c, std::span<const double> x, const Contingency& ctg, const CctSearch& search,
              const SimulationOptions& opt) {
  TsmResult r;
  r.cct = compute_cct(c, x, ctg, search, opt);
  r.margin = r.cct.cct - ctg.t_fct;
  return r;
}

}  // namespace alk
