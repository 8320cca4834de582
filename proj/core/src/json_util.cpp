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

#include "json_util.hpp"

#include <filesystem>
#include <variant>

namespace alk::detail {

json uncertainty_to_json(const UncertaintySpec& s) {
  json dims = json::array();
  for (const auto& d : s.dims) {
    json jd;
    jd["name"] = d.name;
    if (const auto* g = std::get_if<GaussianMarginal>(&d.dist)) {
      jd["kind"] = "gaussian";
      jd["mean"] = g->mean;
      jd["std"] = g->std;
    } else if (const auto* w = std::get_if<WeibullMarginal>(&d.dist)) {
      jd["kind"] = "weibull";
      jd["scale"] = w->scale;
      jd["shape"] = w->shape;
    } else {
      const auto& e = std::get<EmpiricalMarginal>(d.dist);
      jd["kind"] = "empirical";
      jd["values"] = e.values;
      if (!e.units.empty()) jd["units"] = e.units;
    }
    dims.push_back(std::move(jd));
  }
  json groups = json::array();
  for (const auto& g : s.groups) groups.push_back({{"members", g.members}, {"rho", g.rho}});
  return {{"seed", s.seed}, {"dims", dims}, {"groups", groups}};
}

UncertaintySpec uncertainty_from_json(const json& j, const std::string& ctx, const std::string& base_dir) {
  if (!j.is_object()) throw ConfigError("field '" + ctx + "': expected an object");
  UncertaintySpec s;
  s.seed = optional<std::uint64_t>(j, "seed", 0, ctx);
  const auto& dims = required_array(j, "dims", ctx);
  for (std::size_t i = 0; i < dims.size(); ++i) {
    const auto c = ctx + ".dims[" + std::to_string(i) + "]";
    const auto& jd = dims[i];
    const auto name = optional<std::string>(jd, "name", "x" + std::to_string(i), c);
    const auto kind = required<std::string>(jd, "kind", c);
    if (kind == "gaussian") {
      s.dims.push_back(gaussian(name, required<double>(jd, "mean", c), required<double>(jd, "std", c)));
    } else if (kind == "weibull") {
      s.dims.push_back(weibull(name, required<double>(jd, "scale", c), required<double>(jd, "shape", c)));
    } else if (kind == "empirical") {
      if (jd.contains("csv")) {
        std::filesystem::path p = required<std::string>(jd, "csv", c);
        if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
        auto m = load_empirical(p, required<std::string>(jd, "column", c));
        m.name = name;
        s.dims.push_back(std::move(m));
      } else {
        const auto& vals = required_array(jd, "values", c);
        std::vector<double> v;
        for (std::size_t k = 0; k < vals.size(); ++k)
          v.push_back(read_as<double>(vals[k], c + ".values[" + std::to_string(k) + "]"));
        s.dims.push_back(empirical(name, std::move(v), optional<std::string>(jd, "units", "", c)));
      }
    } else {
      throw ConfigError("field '" + c + ".kind': unknown marginal kind '" + kind + "'");
    }
  }
  if (j.contains("groups")) {
    const auto& groups = required_array(j, "groups", ctx);
    for (std::size_t i = 0; i < groups.size(); ++i) {
      const auto c = ctx + ".groups[" + std::to_string(i) + "]";
      CorrelationGroup g;
      const auto& members = required_array(groups[i], "members", c);
      for (std::size_t k = 0; k < members.size(); ++k)
        g.members.push_back(read_as<std::size_t>(members[k], c + ".members[" + std::to_string(k) + "]"));
      g.rho = required<double>(groups[i], "rho", c);
      s.groups.push_back(std::move(g));
    }
  }
  s.validate();
  return s;
}

}  // namespace alk::detail
