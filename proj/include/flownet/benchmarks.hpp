#pragma once

#include "flownet/network.hpp"

#include <string>

namespace flownet {

/// Seven-pipe diamond test network (two boundary nodes).
Network make_diamond_network();

/// Synthetic 38-pipe network with six boundary nodes, diameters in
/// [0.4, 1] m and a total length close to 1008 km. Fully deterministic.
Network make_large38_network();

/// Scenario files for the built-in networks, serialized as JSON text.
/// `paper_scale` selects the full-size discretization; the default desk
/// scale keeps end-to-end runs in the minutes range.
std::string diamond_scenario_json(bool paper_scale, double lambda = 0.01);
std::string large38_scenario_json(char variant, bool paper_scale);  // 'A' or 'B'

}  // namespace flownet
