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
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "alk/error.hpp"
#include "alk/powersim.hpp"
#include "json_util.hpp"

namespace alk {

using detail::json;

std::size_t GridCase::input_dimension() const {
  std::size_t m = 0;
  for (const auto& inj : injections) m = std::max(m, inj.input + 1);
  return m;
}

std::size_t GridCase::bus_index(int id) const {
  for (std::size_t i = 0; i < buses.size(); ++i)
    if (buses[i].id == id) return i;
  throw ConfigError("grid case '" + name + "': no bus with id " + std::to_string(id));
}

std::size_t GridCase::line_index(const std::string& id) const {
  for (std::size_t i = 0; i < lines.size(); ++i)
    if (lines[i].id == id) return i;
  throw ConfigError("grid case '" + name + "': no line with id '" + id + "'");
}

const Contingency& GridCase::contingency(const std::string& cname) const {
  for (const auto& c : contingencies)
    if (c.name == cname) return c;
  throw ConfigError("grid case '" + name + "': no contingency named '" + cname + "'");
}

void GridCase::validate() const {
  const std::string ctx = "grid case '" + name + "': ";
  if (buses.empty()) throw ConfigError(ctx + "no buses");
  if (!(frequency > 0.0 && base_mva > 0.0)) throw ConfigError(ctx + "frequency and base MVA must be positive");
  std::set<int> ids;
  int slack = 0;
  for (const auto& b : buses) {
    if (!ids.insert(b.id).second) throw ConfigError(ctx + "duplicate bus id " + std::to_string(b.id));
    if (b.type == BusType::Slack) ++slack;
    if (b.type != BusType::PQ && !(b.v_set > 0.0)) throw ConfigError(ctx + "voltage setpoint must be positive");
  }
  if (slack != 1) throw ConfigError(ctx + "exactly one slack bus required");

  std::set<std::string> line_ids;
  for (const auto& l : lines) {
    if (!line_ids.insert(l.id).second) throw ConfigError(ctx + "duplicate line id '" + l.id + "'");
    bus_index(l.from);
    bus_index(l.to);
    if (l.from == l.to) throw ConfigError(ctx + "line '" + l.id + "' connects a bus to itself");
    if (std::abs(std::complex<double>(l.r, l.x)) == 0.0) throw ConfigError(ctx + "line '" + l.id + "' has zero impedance");
  }

  // connectivity over in-service lines
  std::vector<std::size_t> parent(buses.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (const auto& l : lines)
    if (l.in_service) parent[find(bus_index(l.from))] = find(bus_index(l.to));
  for (std::size_t i = 1; i < buses.size(); ++i)
    if (find(i) != find(0)) throw ConfigError(ctx + "network is not connected");

  if (machines.empty()) throw ConfigError(ctx + "no machines");
  std::set<int> machine_buses;
  for (const auto& m : machines) {
    const auto& b = buses[bus_index(m.bus)];
    if (!machine_buses.insert(m.bus).second)
      throw ConfigError(ctx + "more than one machine at bus " + std::to_string(m.bus));
    if (b.type == BusType::PQ) throw ConfigError(ctx + "machine at PQ bus " + std::to_string(m.bus));
    if (!m.infinite_bus && !(m.h > 0.0)) throw ConfigError(ctx + "machine H must be positive");
    if (!m.infinite_bus && !(m.xd_prime > 0.0)) throw ConfigError(ctx + "machine x'd must be positive");
    if (!(m.damping >= 0.0)) throw ConfigError(ctx + "machine damping must be non-negative");
  }
  for (const auto& b : buses)
    if (b.type != BusType::PQ && !machine_buses.count(b.id))
      throw ConfigError(ctx + "generator bus " + std::to_string(b.id) + " has no machine");
  for (const auto& l : loads) bus_index(l.bus);
  for (const auto& inj : injections) {
    if (inj.kind == InjectionKind::LoadScale) {
      if (inj.target < 0 || static_cast<std::size_t>(inj.target) >= loads.size())
        throw ConfigError(ctx + "injection input " + std::to_string(inj.input) + " targets unknown load " +
                          std::to_string(inj.target));
    } else {
      bus_index(inj.target);
    }
    if (inj.kind == InjectionKind::Wind) inj.curve.validate();
  }
  if (uncertainty) {
    uncertainty->validate();
    if (uncertainty->dimension() < input_dimension())
      throw ConfigError(ctx + "uncertainty spec has fewer dimensions than the injection map uses");
  }
  for (const auto& c : contingencies) validate(c);
}

void GridCase::validate(const Contingency& ctg) const {
  const std::string ctx = "contingency '" + ctg.name + "': ";
  bus_index(ctg.fault_bus);
  const auto& l = lines[line_index(ctg.tripped_line)];
  if (l.from != ctg.fault_bus && l.to != ctg.fault_bus)
    throw ConfigError(ctx + "tripped line '" + l.id + "' is not adjacent to fault bus " + std::to_string(ctg.fault_bus));
  if (!(ctg.t_fct >= 0.0)) throw ConfigError(ctx + "fault clearing time must be non-negative");
  if (!(ctg.t_fault_on >= 0.0)) throw ConfigError(ctx + "fault-on time must be non-negative");
  if (!(ctg.sim_duration > ctg.t_fault_on + ctg.t_fct))
    throw ConfigError(ctx + "simulation horizon must exceed fault-on time plus clearing time");
}

namespace {

const char* bus_type_name(BusType t) {
  switch (t) {
    case BusType::Slack:
      return "slack";
    case BusType::PV:
      return "pv";
    case BusType::PQ:
      return "pq";
  }
  return "pq";
}

BusType parse_bus_type(const std::string& s, const std::string& path) {
  if (s == "slack") return BusType::Slack;
  if (s == "pv") return BusType::PV;
  if (s == "pq") return BusType::PQ;
  throw ConfigError("field '" + path + "': unknown bus type '" + s + "'");
}

}  // namespace

namespace detail {

json contingency_to_json(const Contingency& c) {
  return {{"name", c.name},           {"fault_bus", c.fault_bus}, {"tripped_line", c.tripped_line},
          {"t_fault_on", c.t_fault_on}, {"t_fct", c.t_fct},       {"sim_duration", c.sim_duration}};
}

Contingency contingency_from_json(const json& j, const std::string& ctx, double frequency) {
  using detail::optional;
  using detail::required;
  Contingency c;
  c.name = optional<std::string>(j, "name", "", ctx);
  c.fault_bus = required<int>(j, "fault_bus", ctx);
  c.tripped_line = required<std::string>(j, "tripped_line", ctx);
  c.t_fault_on = optional<double>(j, "t_fault_on", 0.1, ctx);
  if (j.contains("t_fct_cycles")) {
    c.t_fct = required<double>(j, "t_fct_cycles", ctx) / frequency;
  } else {
    c.t_fct = required<double>(j, "t_fct", ctx);
  }
  c.sim_duration = optional<double>(j, "sim_duration", 12.0, ctx);
  return c;
}

}  // namespace detail

std::string grid_case_to_json(const GridCase& c) {
  json j;
  j["schema"] = "alk.gridcase/1";
  j["name"] = c.name;
  j["frequency_hz"] = c.frequency;
  j["base_mva"] = c.base_mva;
  for (const auto& b : c.buses) {
    json jb{{"id", b.id}, {"type", bus_type_name(b.type)}};
    if (b.type != BusType::PQ) jb["v"] = b.v_set;
    if (b.type == BusType::Slack) jb["angle"] = b.angle;
    if (b.type == BusType::PV) jb["p_gen"] = b.p_gen;
    j["buses"].push_back(jb);
  }
  for (const auto& l : c.lines)
    j["lines"].push_back(
        {{"id", l.id}, {"from", l.from}, {"to", l.to}, {"r", l.r}, {"x", l.x}, {"b", l.b}, {"in_service", l.in_service}});
  for (const auto& m : c.machines) {
    json jm{{"bus", m.bus}, {"damping", m.damping}};
    if (m.infinite_bus) {
      jm["infinite_bus"] = true;
    } else {
      jm["h"] = m.h;
      jm["xd_prime"] = m.xd_prime;
    }
    j["machines"].push_back(jm);
  }
  j["loads"] = json::array();
  for (const auto& l : c.loads) j["loads"].push_back({{"bus", l.bus}, {"p", l.p}, {"q", l.q}});
  j["injections"] = json::array();
  for (const auto& inj : c.injections) {
    json ji{{"input", inj.input}};
    switch (inj.kind) {
      case InjectionKind::LoadScale:
        ji["kind"] = "load_scale";
        ji["load"] = inj.target;
        break;
      case InjectionKind::Wind:
        ji["kind"] = "wind";
        ji["bus"] = inj.target;
        ji["turbines"] = inj.multiplier;
        ji["curve"] = {{"rated_mw", inj.curve.rated_power},
                       {"cut_in", inj.curve.cut_in},
                       {"rated_speed", inj.curve.rated_speed},
                       {"cut_out", inj.curve.cut_out}};
        break;
      case InjectionKind::Solar:
        ji["kind"] = "solar";
        ji["bus"] = inj.target;
        ji["multiplier"] = inj.multiplier;
        break;
    }
    j["injections"].push_back(ji);
  }
  if (c.uncertainty) j["uncertainty"] = detail::uncertainty_to_json(*c.uncertainty);
  j["contingencies"] = json::array();
  for (const auto& ctg : c.contingencies) j["contingencies"].push_back(detail::contingency_to_json(ctg));
  return j.dump(2) + "\n";
}

GridCase grid_case_from_json(const std::string& text) {
  using detail::optional;
  using detail::required;
  using detail::required_array;
  const json j = detail::parse_json(text, "grid case");
  if (!j.is_object()) throw ConfigError("grid case: expected a JSON object");
  const auto schema = optional<std::string>(j, "schema", "alk.gridcase/1", "");
  if (schema != "alk.gridcase/1") throw ConfigError("field 'schema': unsupported grid case schema '" + schema + "'");

  GridCase c;
  c.name = optional<std::string>(j, "name", "grid", "");
  c.frequency = optional<double>(j, "frequency_hz", 60.0, "");
  c.base_mva = optional<double>(j, "base_mva", 100.0, "");
  const auto& buses = required_array(j, "buses", "");
  for (std::size_t i = 0; i < buses.size(); ++i) {
    const auto ctx = "buses[" + std::to_string(i) + "]";
    Bus b;
    b.id = required<int>(buses[i], "id", ctx);
    b.type = parse_bus_type(required<std::string>(buses[i], "type", ctx), ctx + ".type");
    b.v_set = optional<double>(buses[i], "v", 1.0, ctx);
    b.angle = optional<double>(buses[i], "angle", 0.0, ctx);
    b.p_gen = optional<double>(buses[i], "p_gen", 0.0, ctx);
    c.buses.push_back(b);
  }
  const auto& lines = required_array(j, "lines", "");
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto ctx = "lines[" + std::to_string(i) + "]";
    Line l;
    l.id = required<std::string>(lines[i], "id", ctx);
    l.from = required<int>(lines[i], "from", ctx);
    l.to = required<int>(lines[i], "to", ctx);
    l.r = optional<double>(lines[i], "r", 0.0, ctx);
    l.x = required<double>(lines[i], "x", ctx);
    l.b = optional<double>(lines[i], "b", 0.0, ctx);
    l.in_service = optional<bool>(lines[i], "in_service", true, ctx);
    c.lines.push_back(l);
  }
  const auto& machines = required_array(j, "machines", "");
  for (std::size_t i = 0; i < machines.size(); ++i) {
    const auto ctx = "machines[" + std::to_string(i) + "]";
    Machine m;
    m.bus = required<int>(machines[i], "bus", ctx);
    m.infinite_bus = optional<bool>(machines[i], "infinite_bus", false, ctx);
    m.h = m.infinite_bus ? 0.0 : required<double>(machines[i], "h", ctx);
    m.xd_prime = m.infinite_bus ? 0.0 : required<double>(machines[i], "xd_prime", ctx);
    m.damping = optional<double>(machines[i], "damping", 0.0, ctx);
    c.machines.push_back(m);
  }
  if (j.contains("loads")) {
    const auto& loads = required_array(j, "loads", "");
    for (std::size_t i = 0; i < loads.size(); ++i) {
      const auto ctx = "loads[" + std::to_string(i) + "]";
      c.loads.push_back(
          {required<int>(loads[i], "bus", ctx), required<double>(loads[i], "p", ctx), optional<double>(loads[i], "q", 0.0, ctx)});
    }
  }
  if (j.contains("injections")) {
    const auto& inj = required_array(j, "injections", "");
    for (std::size_t i = 0; i < inj.size(); ++i) {
      const auto ctx = "injections[" + std::to_string(i) + "]";
      Injection in;
      in.input = required<std::size_t>(inj[i], "input", ctx);
      const auto kind = required<std::string>(inj[i], "kind", ctx);
      if (kind == "load_scale") {
        in.kind = InjectionKind::LoadScale;
        in.target = required<int>(inj[i], "load", ctx);
      } else if (kind == "wind") {
        in.kind = InjectionKind::Wind;
        in.target = required<int>(inj[i], "bus", ctx);
        in.multiplier = optional<double>(inj[i], "turbines", 1.0, ctx);
        if (inj[i].contains("curve")) {
          const auto& cv = detail::required_object(inj[i], "curve", ctx);
          const auto cctx = ctx + ".curve";
          in.curve.rated_power = optional<double>(cv, "rated_mw", 1.5, cctx);
          in.curve.cut_in = optional<double>(cv, "cut_in", 3.0, cctx);
          in.curve.rated_speed = optional<double>(cv, "rated_speed", 12.0, cctx);
          in.curve.cut_out = optional<double>(cv, "cut_out", 25.0, cctx);
        }
      } else if (kind == "solar") {
        in.kind = InjectionKind::Solar;
        in.target = required<int>(inj[i], "bus", ctx);
        in.multiplier = optional<double>(inj[i], "multiplier", 1.0, ctx);
      } else {
        throw ConfigError("field '" + ctx + ".kind': unknown injection kind '" + kind + "'");
      }
      c.injections.push_back(in);
    }
  }
  if (j.contains("uncertainty")) c.uncertainty = detail::uncertainty_from_json(j["uncertainty"], "uncertainty");
  if (j.contains("contingencies")) {
    const auto& cts = required_array(j, "contingencies", "");
    for (std::size_t i = 0; i < cts.size(); ++i)
      c.contingencies.push_back(detail::contingency_from_json(cts[i], "contingencies[" + std::to_string(i) + "]", c.frequency));
  }
  c.validate();
  return c;
}

GridCase load_grid_case(const std::string& ref) {
  if (ref == "builtin:smib") return builtin_smib();
  if (ref == "builtin:ieee9") return builtin_ieee9();
  if (ref.rfind("builtin:", 0) == 0) throw ConfigError("unknown built-in grid case '" + ref + "'");
  std::ifstream in(ref);
  if (!in) throw ConfigError("cannot open grid case file '" + ref + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return grid_case_from_json(ss.str());
}

}  // namespace alk
