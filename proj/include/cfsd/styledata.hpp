#pragma once
#include <cstdint>
#include <string>
#include <vector>

namespace cfsd {

enum class ArtifactType { kNone, kPeriodicGrid, kSpectralPeak, kQuantization, kChecker };

const char* artifact_name(ArtifactType t);
ArtifactType artifact_from_name(const std::string& name);

// Parameters of one procedural style: an oriented sinusoidal ridge pattern
// plus noise/blur, and for synthetic-analog styles an artifact signature
// superimposed on top. Stands in for a sensor (real-analog) or a generator
// (synthetic-analog).
struct StyleSpec {
    std::string tag;
    bool synthetic = false;
    double ridge_freq = 0.16;      // cycles/pixel, in (0, 0.5)
    double orient_smooth = 0.6;    // stddev of the orientation-field coefficients
    double noise_sigma = 0.0;
    int blur_radius = 0;
    ArtifactType artifact = ArtifactType::kNone;
    double artifact_amp = 0.0;
    double artifact_period = 8.0;  // grid/checker cell size
    double artifact_fx = 0.3;      // spectral peak frequency (cycles/pixel)
    double artifact_fy = 0.11;
    int artifact_levels = 6;       // quantization levels
    std::uint64_t base_seed = 0;

    void validate() const;
};

struct Sample {
    std::vector<double> pixels;  // row-major, values in [0,1]
    int label = 0;               // 1 = synthetic
    std::string style;
    std::uint64_t id = 0;
};

struct Dataset {
    std::size_t patch_h = 32;
    std::size_t patch_w = 32;
    std::vector<Sample> samples;

    std::vector<std::string> style_order() const;  // first-appearance order
};

// Renders n samples; sample i is a pure function of (spec, seed, i). Pixels
// are clipped to [0,1] and NOT standardized; preprocessing happens at the
// model boundary.
std::vector<Sample> gen_style(const StyleSpec& spec, std::size_t n, std::uint64_t seed,
                              std::size_t patch_h = 32, std::size_t patch_w = 32);

// The desk-scale protocol: 8 real-analog styles, the base synthetic-analog
// style S0, and adaptation styles S1..S5 with strictly decreasing artifact
// amplitude (later styles are harder).
std::vector<StyleSpec> default_protocol_styles();

// Per-style stratified split with disjoint samples; same seed, same split.
struct SplitResult {
    Dataset train;
    Dataset test;
};
SplitResult split(const Dataset& data, double test_fraction, std::uint64_t seed);

}  // namespace cfsd
