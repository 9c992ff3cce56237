#pragma once

// Shared helpers for the test binaries.

#include <filesystem>
#include <string>

#include "mpsdn/scenario.hpp"

namespace fixtures {

inline std::filesystem::path scenario_dir() { return MPSDN_TEST_SCENARIO_DIR; }

inline mpsdn::ScenarioConfig bundled(const std::string& name) {
  return mpsdn::load_scenario_file((scenario_dir() / (name + ".scn")).string());
}

/// One TCP flow over a single SRC -> DST link.
inline std::string single_link_scenario(double capacity_mbps, double latency_ms, double duration_s,
                                        double loss = 0.0) {
  return "scenario single { duration_s = " + std::to_string(duration_s) +
         " }\nnodes { SRC DST }\nlink SRC <-> DST { capacity_mbps = " + std::to_string(capacity_mbps) +
         "  latency_ms = " + std::to_string(latency_ms) + "  loss = " + std::to_string(loss) +
         " }\nflow tcp { src = SRC  dst = DST }\n";
}

}  // namespace fixtures
