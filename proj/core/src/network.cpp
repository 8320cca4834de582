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

#include <Eigen/Dense>

#include "alk/error.hpp"
#include "alk/powersim.hpp"

namespace alk {

using cd = std::complex<double>;

namespace {

constexpr double kMismatchTol = 1e-8;
constexpr int kMaxNewtonIterations = 30;

Eigen::MatrixXcd bus_admittance(const GridCase& c, const std::string& skip_line = {}) {
  const auto n = static_cast<Eigen::Index>(c.buses.size());
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
  for (const auto& l : c.lines) {
    if (!l.in_service || l.id == skip_line) continue;
    const auto i = static_cast<Eigen::Index>(c.bus_index(l.from));
    const auto k = static_cast<Eigen::Index>(c.bus_index(l.to));
    const cd ys = 1.0 / cd(l.r, l.x);
    const cd ysh(0.0, l.b / 2.0);
    y(i, i) += ys + ysh;
    y(k, k) += ys + ysh;
    y(i, k) -= ys;
    y(k, i) -= ys;
  }
  return y;
}

// Net constant-power load per bus for realization x: scaled loads minus
// renewable injections.
void net_loads(const GridCase& c, std::span<const double> x, Eigen::VectorXd& p, Eigen::VectorXd& q) {
  const auto n = static_cast<Eigen::Index>(c.buses.size());
  std::vector<double> scale(c.loads.size(), 1.0);
  p = Eigen::VectorXd::Zero(n);
  q = Eigen::VectorXd::Zero(n);
  for (const auto& inj : c.injections) {
    const double v = x[inj.input];
    switch (inj.kind) {
      case InjectionKind::LoadScale:
        scale[static_cast<std::size_t>(inj.target)] *= v;
        break;
      case InjectionKind::Wind:
        p(static_cast<Eigen::Index>(c.bus_index(inj.target))) -=
            inj.multiplier * wind_power(inj.curve, std::max(v, 0.0)) / c.base_mva;
        break;
      case InjectionKind::Solar:
        p(static_cast<Eigen::Index>(c.bus_index(inj.target))) -= inj.multiplier * v / c.base_mva;
        break;
    }
  }
  for (std::size_t k = 0; k < c.loads.size(); ++k) {
    const auto b = static_cast<Eigen::Index>(c.bus_index(c.loads[k].bus));
    p(b) += scale[k] * c.loads[k].p;
    q(b) += scale[k] * c.loads[k].q;
  }
}

}  // namespace

Eigen::MatrixXcd kron_reduce(const Eigen::MatrixXcd& y, const std::vector<Eigen::Index>& retained) {
  const auto n = y.rows();
  std::vector<bool> keep(static_cast<std::size_t>(n), false);
  for (auto r : retained) {
    if (r < 0 || r >= n) throw ConfigError("kron_reduce: retained node out of range");
    keep[static_cast<std::size_t>(r)] = true;
  }
  std::vector<Eigen::Index> elim;
  for (Eigen::Index i = 0; i < n; ++i)
    if (!keep[static_cast<std::size_t>(i)]) elim.push_back(i);

  const Eigen::MatrixXcd yrr = y(retained, retained);
  if (elim.empty()) return yrr;

  const Eigen::MatrixXcd yee = y(elim, elim);
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(yee);
  if (lu.rank() < yee.rows()) throw NumericalError("kron_reduce: eliminated block is singular");
  return yrr - y(retained, elim) * lu.solve(y(elim, retained));
}

OperatingPoint solve_prefault(const GridCase& c, std::span<const double> x) {
  if (x.size() < c.input_dimension())
    throw ConfigError("sample has " + std::to_string(x.size()) + " inputs, grid case '" + c.name + "' expects " +
                      std::to_string(c.input_dimension()));
  for (double v : x)
    if (!std::isfinite(v)) throw EvaluationError("non-finite input sample");

  const auto n = static_cast<Eigen::Index>(c.buses.size());
  const Eigen::MatrixXcd ybus = bus_admittance(c);

  OperatingPoint op;
  net_loads(c, x, op.load_p, op.load_q);

  Eigen::VectorXd p_spec = -op.load_p;
  const Eigen::VectorXd q_spec = -op.load_q;
  std::vector<Eigen::Index> pvpq, pq;
  Eigen::VectorXd vm(n), va(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& b = c.buses[static_cast<std::size_t>(i)];
    vm(i) = b.type == BusType::PQ ? 1.0 : b.v_set;
    va(i) = b.type == BusType::Slack ? b.angle : 0.0;
    if (b.type == BusType::PV) p_spec(i) += b.p_gen;
    if (b.type != BusType::Slack) pvpq.push_back(i);
    if (b.type == BusType::PQ) pq.push_back(i);
  }
  const auto npvpq = static_cast<Eigen::Index>(pvpq.size());
  const auto npq = static_cast<Eigen::Index>(pq.size());

  auto voltage = [&] {
    Eigen::VectorXcd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = std::polar(vm(i), va(i));
    return v;
  };

  Eigen::VectorXcd v = voltage();
  Eigen::VectorXd f(npvpq + npq);
  auto mismatch = [&] {
    const Eigen::VectorXcd s = v.cwiseProduct((ybus * v).conjugate());
    for (Eigen::Index k = 0; k < npvpq; ++k) f(k) = s(pvpq[static_cast<std::size_t>(k)]).real() - p_spec(pvpq[static_cast<std::size_t>(k)]);
    for (Eigen::Index k = 0; k < npq; ++k) f(npvpq + k) = s(pq[static_cast<std::size_t>(k)]).imag() - q_spec(pq[static_cast<std::size_t>(k)]);
    return f.size() ? f.lpNorm<Eigen::Infinity>() : 0.0;
  };

  double err = mismatch();
  int it = 0;
  while (!(err < kMismatchTol)) {
    if (it >= kMaxNewtonIterations || !std::isfinite(err))
      throw EvaluationError("power flow diverged (mismatch " + std::to_string(err) + " after " + std::to_string(it) +
                            " iterations)");
    // Polar-form derivatives of the complex injections.
    const Eigen::VectorXcd ibus = ybus * v;
    const Eigen::VectorXcd vnorm = v.cwiseQuotient(vm.cast<cd>());
    const Eigen::MatrixXcd ds_dva =
        cd(0.0, 1.0) * v.asDiagonal() * (Eigen::MatrixXcd(ibus.asDiagonal()) - ybus * v.asDiagonal()).conjugate();
    const Eigen::MatrixXcd ds_dvm = v.asDiagonal() * (ybus * vnorm.asDiagonal()).conjugate() +
                                    Eigen::MatrixXcd(ibus.conjugate().asDiagonal()) * vnorm.asDiagonal();
    Eigen::MatrixXd j(npvpq + npq, npvpq + npq);
    j.topLeftCorner(npvpq, npvpq) = ds_dva(pvpq, pvpq).real();
    j.topRightCorner(npvpq, npq) = ds_dvm(pvpq, pq).real();
    j.bottomLeftCorner(npq, npvpq) = ds_dva(pq, pvpq).imag();
    j.bottomRightCorner(npq, npq) = ds_dvm(pq, pq).imag();
    const Eigen::VectorXd dx = j.partialPivLu().solve(-f);
    for (Eigen::Index k = 0; k < npvpq; ++k) va(pvpq[static_cast<std::size_t>(k)]) += dx(k);
    for (Eigen::Index k = 0; k < npq; ++k) vm(pq[static_cast<std::size_t>(k)]) += dx(npvpq + k);
    v = voltage();
    err = mismatch();
    ++it;
  }
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(vm(i) > 0.0)) throw EvaluationError("power flow converged to a non-physical voltage");

  op.bus_voltage = v;
  op.iterations = it;
  op.mismatch = err;
  const Eigen::VectorXcd s = v.cwiseProduct((ybus * v).conjugate());
  op.p_injection = s.real();
  op.q_injection = s.imag();

  const auto nm = static_cast<Eigen::Index>(c.machines.size());
  op.emf.resize(nm);
  op.delta0.resize(nm);
  op.p_mech.resize(nm);
  for (Eigen::Index k = 0; k < nm; ++k) {
    const auto& m = c.machines[static_cast<std::size_t>(k)];
    const auto b = static_cast<Eigen::Index>(c.bus_index(m.bus));
    const cd sg(op.p_injection(b) + op.load_p(b), op.q_injection(b) + op.load_q(b));
    cd e = v(b);
    if (!m.infinite_bus) e += cd(0.0, m.xd_prime) * std::conj(sg / v(b));
    op.emf(k) = std::abs(e);
    op.delta0(k) = std::arg(e);
    op.p_mech(k) = sg.real();
  }
  return op;
}

Eigen::MatrixXcd reduced_admittance(const GridCase& c, const OperatingPoint& op, const Contingency& ctg,
                                    NetworkPhase phase) {
  const auto nb = static_cast<Eigen::Index>(c.buses.size());
  std::vector<Eigen::Index> internal(c.machines.size(), -1);
  Eigen::Index nodes = nb;
  for (std::size_t k = 0; k < c.machines.size(); ++k)
    if (!c.machines[k].infinite_bus) internal[k] = nodes++;

  const std::string skip = phase == NetworkPhase::PostFault ? ctg.tripped_line : std::string{};
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(nodes, nodes);
  y.topLeftCorner(nb, nb) = bus_admittance(c, skip);
  for (Eigen::Index i = 0; i < nb; ++i) {
    const double vm2 = std::norm(op.bus_voltage(i));
    y(i, i) += cd(op.load_p(i), -op.load_q(i)) / vm2;
  }
  std::vector<Eigen::Index> retained;
  for (std::size_t k = 0; k < c.machines.size(); ++k) {
    const auto& m = c.machines[k];
    const auto b = static_cast<Eigen::Index>(c.bus_index(m.bus));
    if (m.infinite_bus) {
      retained.push_back(b);
      continue;
    }
    const cd ym = 1.0 / cd(0.0, m.xd_prime);
    const auto e = internal[k];
    y(b, b) += ym;
    y(e, e) += ym;
    y(b, e) -= ym;
    y(e, b) -= ym;
    retained.push_back(e);
  }

  if (phase != NetworkPhase::FaultOn) return kron_reduce(y, retained);

  // A bolted fault pins the faulted bus at zero voltage: drop its node.
  const auto fb = static_cast<Eigen::Index>(c.bus_index(ctg.fault_bus));
  std::vector<Eigen::Index> kept;
  for (Eigen::Index i = 0; i < nodes; ++i)
    if (i != fb) kept.push_back(i);
  const Eigen::MatrixXcd yk = y(kept, kept);
  std::vector<Eigen::Index> pos;
  for (auto r : retained) {
    if (r == fb) throw ConfigError("fault applied at an infinite bus");
    pos.push_back(r < fb ? r : r - 1);
  }
  return kron_reduce(yk, pos);
}

}  // namespace alk
