#pragma once
#include <optional>
#include <string>

#include "cfsd/model.hpp"
#include "cfsd/optim.hpp"

namespace cfsd {

// Versioned binary checkpoint: magic "CFSD1", architecture descriptor, then
// raw little-endian f64 weight blocks in declared layer order; optimizer
// state rides along optionally.
void save_checkpoint(const DetectorParams& params, const std::string& path,
                     const OptState* opt_state = nullptr);

struct Checkpoint {
    DetectorParams params;
    std::optional<OptState> opt_state;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace cfsd
