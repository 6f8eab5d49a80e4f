#include "flownet/scenario.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace flownet {

using nlohmann::json;

void Scenario::validate(const Network& net) const {
  if (!(dt > 0.0)) throw ValidationError("scenario dt must be positive");
  if (!(T > 0.0)) throw ValidationError("scenario horizon must be positive");
  std::set<NodeId> seen;
  for (const auto& bc : boundary) {
    if (net.boundary_index(bc.node) < 0)
      throw ValidationError("boundary condition on non-boundary node " +
                            std::to_string(bc.node));
    if (!seen.insert(bc.node).second)
      throw ValidationError("duplicate boundary condition on node " +
                            std::to_string(bc.node));
  }
  if (seen.size() != static_cast<size_t>(net.num_boundary_nodes()))
    throw ValidationError("every boundary node needs exactly one condition");
}

Scenario parse_scenario(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("scenario JSON parse failure: ") + e.what());
  }
  try {
    Scenario sc;
    sc.T = j.at("T_hours").get<double>() * 3600.0;
    sc.dt = j.at("dt_seconds").get<double>();

    if (j.contains("physics")) {
      const json& p = j.at("physics");
      sc.physics.RT = p.value("RT", sc.physics.RT);
      sc.physics.alpha = p.value("alpha", sc.physics.alpha);
      sc.physics.rho_ref = p.value("rho_ref", sc.physics.rho_ref);
      sc.physics.flow_ref = p.value("flow_ref", sc.physics.flow_ref);
    }
    const json& fr = j.at("friction");
    const std::string model = fr.at("model").get<std::string>();
    if (model == "turbulent") {
      sc.physics.friction = FrictionModel::Turbulent;
      sc.physics.lambda_default = fr.at("lambda").get<double>();
      if (fr.contains("lambda_per_edge"))
        for (const auto& [key, val] : fr.at("lambda_per_edge").items())
          sc.physics.lambda_per_edge[std::stoi(key)] = val.get<double>();
    } else if (model == "laminar") {
      sc.physics.friction = FrictionModel::Laminar;
      sc.physics.laminar_coefficient = fr.at("coefficient").get<double>();
    } else {
      throw ParseError("unknown friction model: " + model);
    }

    for (const auto& jb : j.at("boundary")) {
      BoundaryCondition bc;
      bc.node = jb.at("node").get<NodeId>();
      const std::string type = jb.at("type").get<std::string>();
      if (type == "potential") {
        bc.type = BcType::Potential;
        const std::string given = jb.value("given", std::string("density"));
        if (given == "density")
          bc.given = PotentialGiven::Density;
        else if (given == "potential")
          bc.given = PotentialGiven::Potential;
        else
          throw ParseError("unknown potential interpretation: " + given);
      } else if (type == "massflow") {
        bc.type = BcType::MassFlow;
      } else {
        throw ParseError("unknown boundary type: " + type);
      }
      bc.profile = Profile::parse(jb.at("profile"));
      sc.boundary.push_back(std::move(bc));
    }

    const json& init = j.at("initial");
    if (init.is_string()) {
      if (init.get<std::string>() != "steady")
        throw ParseError("initial must be \"steady\" or {\"uniform\": ...}");
    } else {
      UniformInitial u;
      u.rho = init.at("uniform").at("rho").get<double>();
      u.m = init.at("uniform").value("m", 0.0);
      sc.uniform_initial = u;
    }
    return sc;
  } catch (const json::exception& e) {
    throw ParseError(std::string("scenario JSON schema violation: ") + e.what());
  }
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string scenario_to_json(const Scenario& sc) {
  json j;
  j["T_hours"] = sc.T / 3600.0;
  j["dt_seconds"] = sc.dt;
  j["physics"] = {{"RT", sc.physics.RT},
                  {"alpha", sc.physics.alpha},
                  {"rho_ref", sc.physics.rho_ref},
                  {"flow_ref", sc.physics.flow_ref}};
  if (sc.physics.friction == FrictionModel::Turbulent) {
    json fr = {{"model", "turbulent"}, {"lambda", sc.physics.lambda_default}};
    if (!sc.physics.lambda_per_edge.empty()) {
      json per;
      for (const auto& [e, v] : sc.physics.lambda_per_edge) per[std::to_string(e)] = v;
      fr["lambda_per_edge"] = per;
    }
    j["friction"] = fr;
  } else {
    j["friction"] = {{"model", "laminar"}, {"coefficient", sc.physics.laminar_coefficient}};
  }
  j["boundary"] = json::array();
  for (const auto& bc : sc.boundary) {
    json jb;
    jb["node"] = bc.node;
    if (bc.type == BcType::Potential) {
      jb["type"] = "potential";
      jb["given"] = bc.given == PotentialGiven::Density ? "density" : "potential";
    } else {
      jb["type"] = "massflow";
    }
    jb["profile"] = bc.profile.to_json();
    j["boundary"].push_back(jb);
  }
  j["initial"] = sc.uniform_initial
                     ? json{{"uniform", {{"rho", sc.uniform_initial->rho},
                                         {"m", sc.uniform_initial->m}}}}
                     : json("steady");
  return j.dump(2) + "\n";
}

BoundarySchedule::BoundarySchedule(const Scenario& sc, const Network& net)
    : cfg_(&sc.physics) {
  sc.validate(net);
  // Deterministic slot order: follow boundary_order.
  std::vector<const BoundaryCondition*> by_slot(net.num_boundary_nodes(), nullptr);
  for (const auto& bc : sc.boundary) by_slot[net.boundary_index(bc.node)] = &bc;
  for (int slot = 0; slot < net.num_boundary_nodes(); ++slot) {
    const BoundaryCondition* bc = by_slot[slot];
    if (bc->type == BcType::Potential) {
      pot_slots_.push_back(slot);
      pot_profiles_.push_back(bc->profile);
      pot_given_.push_back(bc->given);
    } else {
      flow_slots_.push_back(slot);
      flow_profiles_.push_back(bc->profile);
    }
  }
}

VecX BoundarySchedule::potentials(double t) const {
  VecX u(pot_slots_.size());
  for (size_t i = 0; i < pot_slots_.size(); ++i) {
    const double v = pot_profiles_[i].eval(t);
    u[static_cast<Eigen::Index>(i)] =
        pot_given_[i] == PotentialGiven::Density ? dP(*cfg_, v) : v;
  }
  return u;
}

VecX BoundarySchedule::flows(double t) const {
  VecX g(flow_slots_.size());
  for (size_t i = 0; i < flow_slots_.size(); ++i)
    g[static_cast<Eigen::Index>(i)] = flow_profiles_[i].eval(t);
  return g;
}

}  // namespace flownet
