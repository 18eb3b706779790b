#include "cfsd/model.hpp"

#include <cmath>
#include <stdexcept>

#include "cfsd/rng.hpp"

namespace cfsd {

void ArchConfig::validate() const {
    if (extractor_dims.empty()) throw std::invalid_argument("arch: extractor_dims empty");
    for (std::size_t d : extractor_dims)
        if (d == 0) throw std::invalid_argument("arch: zero extractor dimension");
    if (feature_dim() % 2 != 0) throw std::invalid_argument("arch: feature dim must be even");
    if (!identity_extractor() && input_dim() != patch_h * patch_w)
        throw std::invalid_argument("arch: extractor input dim != patch pixel count");
}

DetectorParams DetectorParams::clone() const {
    DetectorParams out;
    out.arch = arch;
    out.weights.reserve(weights.size());
    for (const auto& w : weights) out.weights.push_back(std::make_shared<Tensor>(*w));
    return out;
}

bool DetectorParams::same_values(const DetectorParams& o) const {
    if (!(arch == o.arch) || weights.size() != o.weights.size()) return false;
    for (std::size_t i = 0; i < weights.size(); ++i)
        if (weights[i]->value != o.weights[i]->value) return false;
    return true;
}

DetectorParams init_detector(const ArchConfig& arch, std::uint64_t seed) {
    arch.validate();
    DetectorParams p;
    p.arch = arch;
    std::uint64_t layer = 0;
    auto glorot = [&](std::size_t fin, std::size_t fout) {
        Rng rng(mix_seed(seed, 0x57454947 /*"WEIG"*/, layer++));
        const double lim = std::sqrt(6.0 / static_cast<double>(fin + fout));
        auto w = make_tensor({fin, fout});
        for (auto& x : w->value) x = rng.uniform(-lim, lim);
        return w;
    };
    for (std::size_t i = 0; i + 1 < arch.extractor_dims.size(); ++i) {
        p.weights.push_back(glorot(arch.extractor_dims[i], arch.extractor_dims[i + 1]));
        p.weights.push_back(make_tensor({arch.extractor_dims[i + 1]}));
    }
    p.weights.push_back(glorot(arch.feature_dim(), arch.head_hidden()));
    p.weights.push_back(make_tensor({arch.head_hidden()}));
    p.weights.push_back(glorot(arch.head_hidden(), 1));
    p.weights.push_back(make_tensor({1}));
    return p;
}

ForwardResult detector_forward(const DetectorParams& params, const TensorPtr& inputs, Tape* tape) {
    if (inputs->shape.size() != 2 || inputs->shape[1] != params.arch.input_dim())
        throw std::invalid_argument("detector_forward: input shape " + inputs->shape_str() +
                                    " does not match extractor input " +
                                    std::to_string(params.arch.input_dim()));
    Tape scratch;
    Tape& t = tape ? *tape : scratch;

    const std::size_t n_ext = params.arch.extractor_dims.size() - 1;
    TensorPtr h = inputs;
    for (std::size_t i = 0; i < n_ext; ++i) {
        h = t.add_rowvec(t.matmul(h, params.weights[2 * i]), params.weights[2 * i + 1]);
        if (i + 1 < n_ext) h = t.relu(h);
    }
    ForwardResult out;
    out.features = h;
    const std::size_t hb = 2 * n_ext;
    auto hid = t.relu(t.add_rowvec(t.matmul(h, params.weights[hb]), params.weights[hb + 1]));
    out.scores = t.sigmoid(t.add_rowvec(t.matmul(hid, params.weights[hb + 2]), params.weights[hb + 3]));
    return out;
}

std::vector<double> extract_features(std::span<const double> patch, const DetectorParams& params) {
    auto x = make_tensor({1, patch.size()}, {patch.begin(), patch.end()});
    auto r = detector_forward(params, x, nullptr);
    return r.features->value;
}

double score(std::span<const double> features, const DetectorParams& params) {
    if (features.size() != params.arch.feature_dim())
        throw std::invalid_argument("score: feature length mismatch");
    // head only: relu(z W1 + b1) W2 + b2 through sigmoid
    const std::size_t hb = 2 * (params.arch.extractor_dims.size() - 1);
    const auto& w1 = params.weights[hb];
    const auto& b1 = params.weights[hb + 1];
    const auto& w2 = params.weights[hb + 2];
    const auto& b2 = params.weights[hb + 3];
    const std::size_t d = params.arch.feature_dim(), m = params.arch.head_hidden();
    double logit = b2->value[0];
    for (std::size_t j = 0; j < m; ++j) {
        double a = b1->value[j];
        for (std::size_t i = 0; i < d; ++i) a += features[i] * w1->value[i * m + j];
        if (a > 0.0) logit += a * w2->value[j];
    }
    return logit >= 0.0 ? 1.0 / (1.0 + std::exp(-logit)) : std::exp(logit) / (1.0 + std::exp(logit));
}

Detection detect(std::span<const double> patch, const DetectorParams& params, double tau) {
    if (tau < 0.0 || tau > 1.0) throw std::invalid_argument("detect: tau must be in [0,1]");
    auto x = make_tensor({1, patch.size()}, {patch.begin(), patch.end()});
    auto r = detector_forward(params, x, nullptr);
    const double s = r.scores->value[0];
    return {s >= tau ? 1 : 0, s};
}

std::vector<double> preprocess(std::span<const double> raw, std::size_t raw_h, std::size_t raw_w,
                               std::size_t out_h, std::size_t out_w) {
    if (raw.size() != raw_h * raw_w) throw std::invalid_argument("preprocess: raw size mismatch");
    if (raw_h < out_h || raw_w < out_w)
        throw std::invalid_argument("preprocess: raw " + std::to_string(raw_h) + "x" +
                                    std::to_string(raw_w) + " smaller than crop " +
                                    std::to_string(out_h) + "x" + std::to_string(out_w));

    std::size_t top = 0, left = 0;
    if (raw_h > out_h || raw_w > out_w) {
        // summed-area tables of x and x^2 for O(1) window variance
        const std::size_t W = raw_w + 1;
        std::vector<double> s1((raw_h + 1) * W, 0.0), s2((raw_h + 1) * W, 0.0);
        for (std::size_t i = 0; i < raw_h; ++i)
            for (std::size_t j = 0; j < raw_w; ++j) {
                const double v = raw[i * raw_w + j];
                s1[(i + 1) * W + j + 1] = v + s1[i * W + j + 1] + s1[(i + 1) * W + j] - s1[i * W + j];
                s2[(i + 1) * W + j + 1] =
                    v * v + s2[i * W + j + 1] + s2[(i + 1) * W + j] - s2[i * W + j];
            }
        auto window = [&](const std::vector<double>& s, std::size_t r, std::size_t c) {
            return s[(r + out_h) * W + c + out_w] - s[r * W + c + out_w] - s[(r + out_h) * W + c] +
                   s[r * W + c];
        };
        const double cnt = static_cast<double>(out_h * out_w);
        double best = -1.0;
        for (std::size_t r = 0; r + out_h <= raw_h; ++r)
            for (std::size_t c = 0; c + out_w <= raw_w; ++c) {
                const double sum = window(s1, r, c);
                const double var = window(s2, r, c) / cnt - (sum / cnt) * (sum / cnt);
                if (var > best) {  // strict: ties keep the topmost-leftmost window
                    best = var;
                    top = r;
                    left = c;
                }
            }
    }

    std::vector<double> patch(out_h * out_w);
    for (std::size_t i = 0; i < out_h; ++i)
        for (std::size_t j = 0; j < out_w; ++j)
            patch[i * out_w + j] = raw[(top + i) * raw_w + (left + j)];

    const double n = static_cast<double>(patch.size());
    double mean = 0.0;
    for (double v : patch) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : patch) var += (v - mean) * (v - mean);
    var /= n;
    if (var <= 1e-24) {
        std::fill(patch.begin(), patch.end(), 0.5);
        return patch;
    }
    const double sd = std::sqrt(var);
    double lo = 1e300, hi = -1e300;
    for (auto& v : patch) {
        v = (v - mean) / sd;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    for (auto& v : patch) v = (v - lo) / (hi - lo);
    return patch;
}

}  // namespace cfsd
