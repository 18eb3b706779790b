#pragma once
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cfsd/tape.hpp"

namespace cfsd {

// Layer widths of the detector. extractor_dims lists [input, hidden...,
// feature]; ReLU sits between consecutive extractor layers, the feature
// output itself is linear. A single-entry list means the extractor is the
// identity on vectors of that dimension (feature-vector input mode). The
// head is always dense d -> d/2 with ReLU, then d/2 -> 1 with sigmoid.
struct ArchConfig {
    std::size_t patch_h = 32;
    std::size_t patch_w = 32;
    std::vector<std::size_t> extractor_dims = {1024, 128, 64};

    std::size_t input_dim() const { return extractor_dims.front(); }
    std::size_t feature_dim() const { return extractor_dims.back(); }
    std::size_t head_hidden() const { return feature_dim() / 2; }
    bool identity_extractor() const { return extractor_dims.size() == 1; }
    void validate() const;
    bool operator==(const ArchConfig&) const = default;
};

// All learnable weights: extractor layers phi, then head psi. Parameter
// order is fixed (W,b per extractor layer, then head W1,b1,W2,b2); the
// checkpoint format and the optimizer state both rely on it.
struct DetectorParams {
    ArchConfig arch;
    std::vector<TensorPtr> weights;

    std::vector<TensorPtr>& all() { return weights; }
    const std::vector<TensorPtr>& all() const { return weights; }

    DetectorParams clone() const;
    bool same_values(const DetectorParams& o) const;
};

// Glorot-uniform weights (limit sqrt(6/(fan_in+fan_out))), zero biases.
DetectorParams init_detector(const ArchConfig& arch, std::uint64_t seed);

struct ForwardResult {
    TensorPtr features;  // n x d
    TensorPtr scores;    // n x 1
};

// Batched forward pass over row-major n x input_dim inputs. With a tape the
// pass is recorded for backward; with nullptr it is inference-only.
ForwardResult detector_forward(const DetectorParams& params, const TensorPtr& inputs, Tape* tape);

// Single-sample conveniences used by the spec-level operations.
std::vector<double> extract_features(std::span<const double> patch, const DetectorParams& params);
double score(std::span<const double> features, const DetectorParams& params);

struct Detection {
    int decision;  // 1 = synthetic
    double score;
};

// I(s >= tau); the tie counts as synthetic.
Detection detect(std::span<const double> patch, const DetectorParams& params, double tau);

// Crops the H x W window of highest pixel variance (exhaustive scan via
// summed-area tables; ties resolved topmost then leftmost), standardizes to
// zero mean / unit variance, then affinely rescales to [0,1]. A zero-variance
// patch comes out all 0.5.
std::vector<double> preprocess(std::span<const double> raw, std::size_t raw_h, std::size_t raw_w,
                               std::size_t out_h, std::size_t out_w);

}  // namespace cfsd
