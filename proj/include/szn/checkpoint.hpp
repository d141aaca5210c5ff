#pragma once

#include <string>

#include "szn/networks.hpp"

namespace szn {

/// Writes both models to a versioned text checkpoint (layer dims plus
/// row-major weights and biases per named sub-network). Doubles are printed
/// with 17 significant digits so reloads are bit-exact. Layout documented in
/// docs/formats.md.
void save_checkpoint(const std::string& path, const PpnModel& ppn, const EsnModel& esn);

/// Loads a checkpoint written by save_checkpoint, validating the header,
/// sub-network names, and layer dims against the expected architecture.
void load_checkpoint(const std::string& path, PpnModel& ppn, EsnModel& esn);

}  // namespace szn
