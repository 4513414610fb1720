#pragma once

#include <string>

#include "pwforge/driver.hpp"

namespace pwforge {

/// gen-wave inputs: one wave recipe plus the shared grid/source sections.
struct WaveConfig {
    int d = 2;
    std::vector<int> n;
    double r = 1.0;
    StatePoint center;  // default: zero state
    int lambda = 16;
    Box region;
    double delta = 1.0 / 16;
    Mat B;
    std::uint64_t seed = 1;
    HullParams hull;
    SegmentConfig segment;
    std::string output_dir = "out";
};

/// Loads and validates a run configuration document (strict: unknown keys
/// are rejected, all physical parameters validated).
RunConfig load_run_config(const std::string& path);

/// Loads the wave section of a configuration document.
WaveConfig load_wave_config(const std::string& path);

}  // namespace pwforge
