#pragma once

#include "flownet/types.hpp"

#include <nlohmann/json.hpp>

#include <memory>

namespace flownet {

/// Time profile for boundary data: a small closed-form expression tree
/// over the variable t [s] with constants, +, -, *, /, exp, cos, sin,
/// abs, mod, and piecewise-by-interval branches.
class Profile {
 public:
  Profile() = default;

  static Profile parse(const nlohmann::json& expr);
  static Profile constant(double v);

  double eval(double t) const;
  nlohmann::json to_json() const;

  bool valid() const { return root_ != nullptr; }

  struct Node;

 private:
  std::shared_ptr<const Node> root_;
};

}  // namespace flownet
