#pragma once

#include <string>

#include "szn/lip.hpp"
#include "szn/mpc.hpp"
#include "szn/sim.hpp"
#include "szn/train.hpp"

namespace szn {

/// Every tunable in one place; defaults follow the planner parameter table.
struct SznConfig {
    LipParams lip;
    KinematicBounds bounds;
    MpcConfig mpc;
    SimParams sim;
    TrainHyper train;
};

/// Applies `key = value` overrides from a config file (one per line,
/// '#' comments). Unknown keys are an error. Keys documented in
/// docs/formats.md.
SznConfig load_config(const std::string& path, SznConfig base = {});

}  // namespace szn
