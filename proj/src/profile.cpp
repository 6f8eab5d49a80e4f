#include "flownet/profile.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace flownet {

using nlohmann::json;

struct Profile::Node {
  enum class Kind { Const, Time, Add, Sub, Neg, Mul, Div, Exp, Cos, Sin, Abs, Mod, Piecewise };
  Kind kind = Kind::Const;
  double value = 0.0;
  std::vector<std::shared_ptr<const Node>> args;
  std::vector<double> breaks;  // piecewise: t < breaks[i] selects args[i]; args.back() otherwise
};

namespace {

using Node = Profile::Node;
using Ptr = std::shared_ptr<const Node>;

double eval_node(const Node& n, double t) {
  using K = Node::Kind;
  switch (n.kind) {
    case K::Const: return n.value;
    case K::Time: return t;
    case K::Add: {
      double s = 0.0;
      for (const auto& a : n.args) s += eval_node(*a, t);
      return s;
    }
    case K::Sub: return eval_node(*n.args[0], t) - eval_node(*n.args[1], t);
    case K::Neg: return -eval_node(*n.args[0], t);
    case K::Mul: {
      double p = 1.0;
      for (const auto& a : n.args) p *= eval_node(*a, t);
      return p;
    }
    case K::Div: return eval_node(*n.args[0], t) / eval_node(*n.args[1], t);
    case K::Exp: return std::exp(eval_node(*n.args[0], t));
    case K::Cos: return std::cos(eval_node(*n.args[0], t));
    case K::Sin: return std::sin(eval_node(*n.args[0], t));
    case K::Abs: return std::abs(eval_node(*n.args[0], t));
    case K::Mod: {
      const double a = eval_node(*n.args[0], t);
      const double b = eval_node(*n.args[1], t);
      double r = std::fmod(a, b);
      if (r < 0.0) r += std::abs(b);
      return r;
    }
    case K::Piecewise: {
      for (size_t i = 0; i < n.breaks.size(); ++i)
        if (t < n.breaks[i]) return eval_node(*n.args[i], t);
      return eval_node(*n.args.back(), t);
    }
  }
  return 0.0;
}

Ptr parse_node(const json& j);

Ptr make_nary(Node::Kind kind, const json& args, size_t min_args) {
  if (!args.is_array() || args.size() < min_args)
    throw ParseError("profile op needs at least " + std::to_string(min_args) + " args");
  auto n = std::make_shared<Node>();
  n->kind = kind;
  for (const auto& a : args) n->args.push_back(parse_node(a));
  return n;
}

Ptr parse_node(const json& j) {
  if (j.is_number()) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::Const;
    n->value = j.get<double>();
    return n;
  }
  if (j.is_string()) {
    if (j.get<std::string>() == "t") {
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::Time;
      return n;
    }
    throw ParseError("unknown profile symbol: " + j.get<std::string>());
  }
  if (!j.is_object()) throw ParseError("profile node must be number, \"t\", or object");

  if (j.contains("piecewise")) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::Piecewise;
    for (const auto& piece : j.at("piecewise")) {
      n->breaks.push_back(piece.at("until").get<double>());
      n->args.push_back(parse_node(piece.at("expr")));
    }
    if (!j.contains("else")) throw ParseError("piecewise profile needs an else branch");
    n->args.push_back(parse_node(j.at("else")));
    return n;
  }

  const std::string op = j.at("op").get<std::string>();
  const json& args = j.at("args");
  if (op == "+") return make_nary(Node::Kind::Add, args, 1);
  if (op == "*") return make_nary(Node::Kind::Mul, args, 1);
  if (op == "-") {
    if (args.size() == 1) return make_nary(Node::Kind::Neg, args, 1);
    return make_nary(Node::Kind::Sub, args, 2);
  }
  if (op == "/") return make_nary(Node::Kind::Div, args, 2);
  if (op == "exp") return make_nary(Node::Kind::Exp, args, 1);
  if (op == "cos") return make_nary(Node::Kind::Cos, args, 1);
  if (op == "sin") return make_nary(Node::Kind::Sin, args, 1);
  if (op == "abs") return make_nary(Node::Kind::Abs, args, 1);
  if (op == "mod") return make_nary(Node::Kind::Mod, args, 2);
  throw ParseError("unknown profile op: " + op);
}

json node_to_json(const Node& n) {
  using K = Node::Kind;
  auto args_json = [&n]() {
    json a = json::array();
    for (const auto& c : n.args) a.push_back(node_to_json(*c));
    return a;
  };
  switch (n.kind) {
    case K::Const: return n.value;
    case K::Time: return "t";
    case K::Add: return json{{"op", "+"}, {"args", args_json()}};
    case K::Sub: return json{{"op", "-"}, {"args", args_json()}};
    case K::Neg: return json{{"op", "-"}, {"args", args_json()}};
    case K::Mul: return json{{"op", "*"}, {"args", args_json()}};
    case K::Div: return json{{"op", "/"}, {"args", args_json()}};
    case K::Exp: return json{{"op", "exp"}, {"args", args_json()}};
    case K::Cos: return json{{"op", "cos"}, {"args", args_json()}};
    case K::Sin: return json{{"op", "sin"}, {"args", args_json()}};
    case K::Abs: return json{{"op", "abs"}, {"args", args_json()}};
    case K::Mod: return json{{"op", "mod"}, {"args", args_json()}};
    case K::Piecewise: {
      json pieces = json::array();
      for (size_t i = 0; i < n.breaks.size(); ++i)
        pieces.push_back({{"until", n.breaks[i]}, {"expr", node_to_json(*n.args[i])}});
      return json{{"piecewise", pieces}, {"else", node_to_json(*n.args.back())}};
    }
  }
  return nullptr;
}

}  // namespace

Profile Profile::parse(const json& expr) {
  Profile p;
  try {
    p.root_ = parse_node(expr);
  } catch (const json::exception& e) {
    throw ParseError(std::string("profile parse failure: ") + e.what());
  }
  return p;
}

Profile Profile::constant(double v) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Const;
  n->value = v;
  Profile p;
  p.root_ = n;
  return p;
}

double Profile::eval(double t) const {
  if (!root_) throw ValidationError("empty profile");
  return eval_node(*root_, t);
}

json Profile::to_json() const {
  if (!root_) throw ValidationError("empty profile");
  return node_to_json(*root_);
}

}  // namespace flownet
