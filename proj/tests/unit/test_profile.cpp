#include <doctest.h>

#include "flownet/benchmarks.hpp"
#include "flownet/profile.hpp"
#include "flownet/scenario.hpp"

#include "test_helpers.hpp"

#include <cmath>

using namespace flownet;

TEST_SUITE_BEGIN("sim");

TEST_CASE("profile expression tree evaluates the basic ops") {
  auto eval = [](const char* text, double t) {
    return Profile::parse(nlohmann::json::parse(text)).eval(t);
  };
  CHECK(eval("3.5", 100.0) == 3.5);
  CHECK(eval("\"t\"", 42.0) == 42.0);
  CHECK(eval(R"({"op":"+","args":[1,2,"t"]})", 3.0) == 6.0);
  CHECK(eval(R"({"op":"-","args":["t"]})", 3.0) == -3.0);
  CHECK(eval(R"({"op":"*","args":[2,"t",3]})", 2.0) == 12.0);
  CHECK(eval(R"({"op":"/","args":["t",4]})", 2.0) == 0.5);
  CHECK(eval(R"({"op":"exp","args":[0]})", 0.0) == 1.0);
  CHECK(eval(R"({"op":"cos","args":[0]})", 0.0) == 1.0);
  CHECK(eval(R"({"op":"sin","args":[0]})", 0.0) == 0.0);
  CHECK(eval(R"({"op":"abs","args":[{"op":"-","args":[0,"t"]}]})", 2.5) == 2.5);
  CHECK(eval(R"({"op":"mod","args":["t",2]})", 7.0) == 1.0);
  CHECK(eval(R"({"piecewise":[{"until":1,"expr":10}],"else":20})", 0.5) == 10.0);
  CHECK(eval(R"({"piecewise":[{"until":1,"expr":10}],"else":20})", 1.5) == 20.0);
  CHECK_THROWS_AS(eval(R"({"op":"nope","args":[1]})", 0.0), ParseError);
  CHECK_THROWS_AS(eval(R"("x")", 0.0), ParseError);
}

TEST_CASE("profile JSON export round trips") {
  const char* text = R"({"op":"+","args":[1,{"op":"*","args":["t",{"op":"cos","args":["t"]}]}]})";
  Profile p = Profile::parse(nlohmann::json::parse(text));
  Profile q = Profile::parse(p.to_json());
  for (double t : {0.0, 0.3, 2.7, 100.0}) CHECK(p.eval(t) == q.eval(t));
}

TEST_CASE("diamond scenario boundary data matches the closed forms") {
  Scenario sc = parse_scenario(diamond_scenario_json(false, 0.01));
  Network net = make_diamond_network();
  sc.validate(net);
  CHECK(sc.dt == 30.0);
  CHECK(sc.T == doctest::Approx(7200.0));

  BoundarySchedule bc(sc, net);
  REQUIRE(bc.potential_slots().size() == 1);
  REQUIRE(bc.flow_slots().size() == 1);

  // Density ramp 60 + u(t) mapped through P'.
  auto rho_bc = [](double t) {
    if (t < 900.0) return 60.0 + t / 180.0;
    if (t < 1350.0) return 60.0 + 10.0 - t / 180.0;
    return 62.5;
  };
  for (double t : {0.0, 450.0, 899.9, 900.0, 1200.0, 1350.0, 5000.0}) {
    CHECK(bc.potentials(t)[0] ==
          doctest::Approx(dP(sc.physics, rho_bc(t))).epsilon(1e-12));
  }
  // Withdrawal of 200 kg/s through an edge that enters the node.
  CHECK(bc.flows(0.0)[0] == doctest::Approx(-200.0));
}

TEST_CASE("large38 case profiles reproduce u_A and u_B") {
  Scenario a = parse_scenario(large38_scenario_json('A', false));
  Scenario b = parse_scenario(large38_scenario_json('B', false));
  Network net = make_large38_network();
  a.validate(net);
  b.validate(net);

  BoundarySchedule bca(a, net), bcb(b, net);
  auto uA = [](double th) {
    return 6 * std::exp(-1.5 * th) + 4 * std::cos(M_PI / 2 * th) +
           1.5 * std::sin(10 * M_PI * th);
  };
  auto uB = [](double th) {
    auto f = [](double s) { return 1.0 - std::abs(std::fmod(s, 2.0) - 1.0); };
    return 8 * th * th * th * std::exp(-th) - 4 * (th - 2) * f(3 * th);
  };
  for (double t : {0.0, 600.0, 1800.0, 3600.0, 5400.0, 7100.0}) {
    const double th = t / 3600.0;
    // Slot 0 is node 1: density 65 + u.
    CHECK(bca.potentials(t)[0] ==
          doctest::Approx(dP(a.physics, 65.0 + uA(th))).epsilon(1e-12));
    CHECK(bcb.potentials(t)[0] ==
          doctest::Approx(dP(b.physics, 65.0 + uB(th))).epsilon(1e-12));
    // Potential entry 2 is node 4 (node 3 carries the flow condition).
    CHECK(bcb.potentials(t)[2] ==
          doctest::Approx(dP(b.physics, 60.0 - uB(th))).epsilon(1e-12));
  }
  CHECK(bca.flows(0.0)[0] == doctest::Approx(-100.0));
}

TEST_CASE("scenario validation rejects inconsistent boundary sets") {
  Scenario sc = parse_scenario(diamond_scenario_json(false, 0.01));
  Network net = make_diamond_network();
  SUBCASE("missing condition") {
    sc.boundary.pop_back();
    CHECK_THROWS_AS(sc.validate(net), ValidationError);
  }
  SUBCASE("condition on interior node") {
    sc.boundary[1].node = 4;
    CHECK_THROWS_AS(sc.validate(net), ValidationError);
  }
  SUBCASE("duplicate condition") {
    sc.boundary[1].node = 1;
    CHECK_THROWS_AS(sc.validate(net), ValidationError);
  }
}

TEST_CASE("scenario JSON round trip") {
  Scenario sc = parse_scenario(large38_scenario_json('B', false));
  Scenario again = parse_scenario(scenario_to_json(sc));
  CHECK(again.T == sc.T);
  CHECK(again.dt == sc.dt);
  CHECK(again.boundary.size() == sc.boundary.size());
  for (double t : {0.0, 1234.5}) {
    Network net = make_large38_network();
    BoundarySchedule b1(sc, net), b2(again, net);
    CHECK((b1.potentials(t) - b2.potentials(t)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_SUITE_END();
