#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "cfsd/losses.hpp"
#include "cfsd/model.hpp"
#include "cfsd/styledata.hpp"

namespace cfsd {

// Everything a protocol run depends on. Serialized as a flat key=value text
// file; the config hash is taken over the canonical serialization so it is
// stable across parse/serialize round trips.
struct RunConfig {
    ArchConfig arch;

    std::size_t base_epochs = 5;
    std::size_t base_batch = 256;
    std::size_t adapt_epochs = 10;
    std::size_t adapt_batch = 64;

    double lr_max = 5e-4;
    double lr_min = 1e-5;
    double weight_decay = 0.01;
    double lambda = 0.1;
    double beta = 0.1;
    double tau = 0.5;
    double fdr_target = 0.001;

    std::size_t n0 = 100;     // replay retention per base style
    std::size_t shots = 100;  // adaptation samples per new style
    bool replay = true;
    bool balanced_batches = false;
    SupconNorm supcon_norm = SupconNorm::kPaper;

    // desk-scale dataset sizes
    std::size_t real_train = 1000;
    std::size_t real_test = 200;
    std::size_t s0_train = 2000;
    std::size_t s0_test = 500;
    std::size_t adapt_test = 500;
    double validation_fraction = 0.1;

    std::uint64_t seed = 1;
    std::string out_dir;
    std::string style_manifest;  // optional; empty = built-in default protocol

    void validate() const;
    std::string serialize() const;
    static RunConfig parse(const std::string& text);
    static RunConfig load(const std::string& path);
    std::uint64_t hash() const;

    // Protocol styles in adaptation order (reals, then S0, then S1..SK).
    std::vector<StyleSpec> protocol_styles() const;
};

// Resolves the output directory: explicit flag, config value, CFSD_OUT
// environment variable, then "./cfsd-out".
std::string resolve_out_dir(const std::string& flag_value, const RunConfig& cfg);

}  // namespace cfsd
