#pragma once

#include "upsense/cacc.hpp"
#include "upsense/model.hpp"

#include <vector>

namespace upsense::testing {

/// Small scenario for brute-force oracles: G=16, 8 MHz => T = 2 us.
inline ScenarioConfig tiny_config() {
  ScenarioConfig cfg;
  cfg.num_subcarriers = 16;
  cfg.bandwidth_hz = 8e6;
  cfg.num_packets = 8;
  cfg.num_antennas = 3;
  cfg.cp_period_s = 0.4e-6;
  return cfg;
}

/// Reduced-size variant of the desk configuration for faster pipeline tests.
inline ScenarioConfig small_config() {
  ScenarioConfig cfg;
  cfg.num_subcarriers = 128;
  cfg.bandwidth_hz = 64e6; // keeps T = 2 us
  cfg.num_packets = 64;
  return cfg;
}

/// Deterministic 3-target scene within the default constraints.
inline std::vector<PathParams> fixed_scene(const ScenarioConfig& cfg) {
  std::vector<PathParams> paths;
  paths.push_back(make_path(cfg, cd(1.0, 0.0), 0.02e-6, 0.0, 1.1, /*is_los=*/true));
  const double amp = std::pow(10.0, -cfg.los_nlos_gap_db / 20.0);
  paths.push_back(make_path(cfg, std::polar(amp, 0.3), 0.10e-6, 120.0, 0.7));
  paths.push_back(make_path(cfg, std::polar(amp, -1.2), 0.21e-6, -210.0, 1.9));
  paths.push_back(make_path(cfg, std::polar(amp, 2.1), 0.33e-6, 70.0, 2.6));
  return paths;
}

inline XiGrid analytic_xi(const ScenarioConfig& cfg, const std::vector<PathParams>& paths) {
  return decompose_cacc(cfg, paths).xi();
}

} // namespace upsense::testing
