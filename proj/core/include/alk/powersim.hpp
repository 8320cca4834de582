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

#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "alk/sampling.hpp"

namespace alk {

enum class BusType { Slack, PV, PQ };

struct Bus {
  int id = 0;
  BusType type = BusType::PQ;
  double v_set = 1.0;   // p.u., slack and PV buses
  double angle = 0.0;   // rad, slack bus only
  double p_gen = 0.0;   // scheduled generation, PV buses (p.u.)
};

struct Line {
  std::string id;
  int from = 0;
  int to = 0;
  double r = 0.0;  // series impedance, p.u.
  double x = 0.0;
  double b = 0.0;  // total line charging, p.u.
  bool in_service = true;
};

/// Classical machine: constant EMF behind transient reactance. An infinite
/// bus holds its terminal voltage phasor fixed and has no dynamics.
struct Machine {
  int bus = 0;
  double h = 0.0;          // inertia constant, s
  double xd_prime = 0.0;   // transient reactance, p.u.
  double damping = 0.0;    // p.u.
  bool infinite_bus = false;
};

struct Load {
  int bus = 0;
  double p = 0.0;  // p.u. on the system base
  double q = 0.0;
};

enum class InjectionKind { LoadScale, Wind, Solar };

/// Routes one input dimension into the network.
///  - LoadScale: multiplies load `target` (index into loads) P and Q.
///  - Wind: wind speed (m/s) through `curve`, times `multiplier` turbines,
///    injected at bus `target` (MW converted on base_mva).
///  - Solar: input in MW times `multiplier`, injected at bus `target`.
struct Injection {
  std::size_t input = 0;
  InjectionKind kind = InjectionKind::LoadScale;
  int target = 0;
  double multiplier = 1.0;
  WindTurbineCurve curve;
};

struct Contingency {
  std::string name;
  int fault_bus = 0;
  std::string tripped_line;
  double t_fault_on = 0.1;     // s
  double t_fct = 0.0;          // fault clearing time, s
  double sim_duration = 12.0;  // s
};

struct GridCase {
  std::string name;
  std::vector<Bus> buses;
  std::vector<Line> lines;
  std::vector<Machine> machines;
  std::vector<Load> loads;
  std::vector<Injection> injections;
  double frequency = 60.0;  // Hz
  double base_mva = 100.0;
  std::optional<UncertaintySpec> uncertainty;
  std::vector<Contingency> contingencies;

  /// Number of input dimensions the injection map expects (max index + 1).
  std::size_t input_dimension() const;
  std::size_t bus_index(int id) const;
  std::size_t line_index(const std::string& id) const;
  const Contingency& contingency(const std::string& name) const;

  double cycles_to_seconds(double cycles) const { return cycles / frequency; }
  double seconds_to_cycles(double s) const { return s * frequency; }

  void validate() const;
  void validate(const Contingency& ctg) const;
};

GridCase builtin_smib();
GridCase builtin_ieee9();
/// "builtin:smib", "builtin:ieee9" or a JSON file path.
GridCase load_grid_case(const std::string& ref);
GridCase grid_case_from_json(const std::string& text);
std::string grid_case_to_json(const GridCase& c);

/// Converged pre-fault state with the machines represented by their
/// internal nodes.
struct OperatingPoint {
  Eigen::VectorXcd bus_voltage;   // per bus, in GridCase::buses order
  Eigen::VectorXd p_injection;    // net injected power per bus after the flow
  Eigen::VectorXd q_injection;
  Eigen::VectorXd emf;            // internal EMF magnitude per machine
  Eigen::VectorXd delta0;         // internal EMF angle per machine, rad
  Eigen::VectorXd p_mech;         // mechanical power per machine, p.u.
  Eigen::VectorXd load_p;         // net constant-power load per bus incl. RES
  Eigen::VectorXd load_q;
  int iterations = 0;
  double mismatch = 0.0;
};

/// Newton power flow on the realization `x`, followed by the classical
/// machine initialization. Throws EvaluationError if the flow diverges.
OperatingPoint solve_prefault(const GridCase& c, std::span<const double> x);

/// Y_rr - Y_re * Y_ee^-1 * Y_er. Throws NumericalError if Y_ee is singular.
Eigen::MatrixXcd kron_reduce(const Eigen::MatrixXcd& y, const std::vector<Eigen::Index>& retained);

enum class NetworkPhase { PreFault, FaultOn, PostFault };

/// Admittance matrix reduced to the machine internal nodes (machine order).
Eigen::MatrixXcd reduced_admittance(const GridCase& c, const OperatingPoint& op, const Contingency& ctg,
                                    NetworkPhase phase);

/// Classical swing dynamics on a reduced network.
///   d(delta)/dt = w_s * dw
///   2H d(dw)/dt = Pm - Pe - D dw
class SwingSystem {
 public:
  SwingSystem(Eigen::VectorXd emf, Eigen::VectorXd p_mech, Eigen::VectorXd h, Eigen::VectorXd damping,
              std::vector<bool> fixed, double omega_s);

  void set_network(const Eigen::MatrixXcd& y_reduced);
  std::size_t machines() const { return static_cast<std::size_t>(emf_.size()); }
  double omega_s() const { return omega_s_; }

  /// Electrical power output of every machine at rotor angles `delta`.
  Eigen::VectorXd electrical_power(const Eigen::VectorXd& delta) const;

  /// State layout: [delta (n), speed deviation (n)].
  void derivative(const Eigen::VectorXd& state, Eigen::VectorXd& out) const;
  void rk4_step(Eigen::VectorXd& state, double h) const;

 private:
  void power_into(const double* delta, double* pe) const;

  Eigen::VectorXd emf_, p_mech_, h_, damping_, inv_2h_;
  std::vector<bool> fixed_;
  double omega_s_;
  Eigen::MatrixXd g_, b_;
  // Integrator scratch: a SwingSystem must not be shared between threads.
  mutable Eigen::VectorXd k1_, k2_, k3_, k4_, tmp_, sin_, cos_, ec_, es_, pe_;
};

struct SimulationOptions {
  double step = 1e-3;                    // s, RK4
  double angle_threshold = 6.283185307179586;  // rad, max pairwise angle difference
  bool early_exit = true;
  bool record = true;
};

struct TrajectoryResult {
  std::vector<double> time;
  std::vector<Eigen::VectorXd> delta;  // per time point, per machine
  std::vector<Eigen::VectorXd> speed;
  std::vector<double> max_angle_difference;
  bool stable = true;
  bool blew_up = false;  // non-finite state encountered
  double peak_angle_difference = 0.0;
};

TrajectoryResult simulate(const GridCase& c, std::span<const double> x, const Contingency& ctg,
                          const SimulationOptions& opt = {});
TrajectoryResult simulate(const GridCase& c, const OperatingPoint& op, const Contingency& ctg,
                          const SimulationOptions& opt = {});

struct CctSearch {
  double lo = 0.0;
  double hi = 0.5;
  double tol = 1.0 / 240.0;  // a quarter cycle at 60 Hz
};

struct CctResult {
  double cct = 0.0;
  bool censored_stable = false;    // stable at hi, cct = hi
  bool censored_unstable = false;  // unstable at lo, cct = lo
  int simulations = 0;
};

/// Bisection on the fault clearing time. The clearing time of `ctg` is
/// ignored; everything else about the contingency is used as a template.
CctResult compute_cct(const GridCase& c, std::span<const double> x, const Contingency& ctg, const CctSearch& search = {},
                      const SimulationOptions& opt = {});

struct TsmResult {
  double margin = 0.0;  // cct - t_fct, seconds
  CctResult cct;
};

TsmResult tsm(const GridCase& c, std::span<const double> x, const Contingency& ctg, const CctSearch& search = {},
              const SimulationOptions& opt = {});

}  // namespace alk
