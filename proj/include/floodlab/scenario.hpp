#pragma once

#include <iosfwd>
#include <string>

#include "floodlab/trace.hpp"

namespace floodlab {

// Scenario configuration file: '#' comments, 'key = value' lines, and one
// 'segment = <benign|attack> <duration_s> [tcp] [icmp]' line per segment in
// timeline order. Keys:
//
//   benign_rate_pps      offered MAVLink rate (required)
//   degradation_min/max  per-window delivery fraction range under attack
//                        (default 0.05 / 0.40)
//   payload_bytes        flood payload size (default 1000)
//   tcp_port             flood target port (default 80)
//
// Attack segments name one or more flood profiles; 'tcp+icmp' is accepted as
// shorthand for both. The seed is not part of the file; callers supply it.
ScenarioSpec parse_scenario_config(std::istream& in);
ScenarioSpec load_scenario_file(const std::string& path);

}  // namespace floodlab
