#include "flownet/forms.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <numeric>
#include <sstream>

namespace flownet {

using nlohmann::json;

BilinearForm full_form(const FemModel& fm) {
  BilinearForm f;
  f.cells.resize(fm.N1);
  std::iota(f.cells.begin(), f.cells.end(), 0);
  f.weights = fm.cell_area;
  return f;
}

std::string rule_to_json(const QuadratureRule& rule) {
  json j;
  j["cells"] = rule.cells;
  j["weights"] = std::vector<double>(rule.weights.data(),
                                     rule.weights.data() + rule.weights.size());
  j["C_tilde"] = rule.C_tilde;
  j["cond_Mc"] = rule.cond_Mc;
  return j.dump(2) + "\n";
}

QuadratureRule rule_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("rule JSON parse failure: ") + e.what());
  }
  QuadratureRule rule;
  rule.cells = j.at("cells").get<std::vector<int>>();
  auto w = j.at("weights").get<std::vector<double>>();
  if (w.size() != rule.cells.size())
    throw ParseError("rule cells/weights length mismatch");
  rule.weights = Eigen::Map<const VecX>(w.data(), static_cast<Eigen::Index>(w.size()));
  rule.C_tilde = j.value("C_tilde", 10.0);
  rule.cond_Mc = j.value("cond_Mc", 0.0);
  return rule;
}

void save_rule(const QuadratureRule& rule, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write rule file: " + path);
  out << rule_to_json(rule);
}

QuadratureRule load_rule(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open rule file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return rule_from_json(ss.str());
}

}  // namespace flownet
