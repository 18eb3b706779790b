#include "cfsd/styledata.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "cfsd/rng.hpp"

namespace cfsd {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

const char* artifact_name(ArtifactType t) {
    switch (t) {
        case ArtifactType::kNone: return "none";
        case ArtifactType::kPeriodicGrid: return "periodic-grid";
        case ArtifactType::kSpectralPeak: return "spectral-peak";
        case ArtifactType::kQuantization: return "quantization";
        case ArtifactType::kChecker: return "checker";
    }
    return "none";
}

ArtifactType artifact_from_name(const std::string& name) {
    if (name == "none") return ArtifactType::kNone;
    if (name == "periodic-grid") return ArtifactType::kPeriodicGrid;
    if (name == "spectral-peak") return ArtifactType::kSpectralPeak;
    if (name == "quantization") return ArtifactType::kQuantization;
    if (name == "checker") return ArtifactType::kChecker;
    throw std::invalid_argument("unknown artifact type: " + name);
}

void StyleSpec::validate() const {
    if (tag.empty()) throw std::invalid_argument("style: empty tag");
    if (ridge_freq <= 0.0 || ridge_freq >= 0.5)
        throw std::invalid_argument("style " + tag + ": ridge frequency must be in (0, 0.5)");
    if (artifact_amp < 0.0) throw std::invalid_argument("style " + tag + ": negative amplitude");
    if (!synthetic && artifact != ArtifactType::kNone)
        throw std::invalid_argument("style " + tag + ": real-analog styles carry no artifact");
}

std::vector<std::string> Dataset::style_order() const {
    std::vector<std::string> order;
    for (const auto& s : samples) {
        bool seen = false;
        for (const auto& t : order)
            if (t == s.style) { seen = true; break; }
        if (!seen) order.push_back(s.style);
    }
    return order;
}

std::vector<Sample> gen_style(const StyleSpec& spec, std::size_t n, std::uint64_t seed,
                              std::size_t patch_h, std::size_t patch_w) {
    if (n < 1) throw std::invalid_argument("gen_style: n must be >= 1");
    spec.validate();
    const std::uint64_t stream = mix_seed(seed, spec.base_seed);
    const std::uint64_t id_base = splitmix64(mix_seed(stream, fnv1a64(spec.tag)))
                                  & 0xFFFFFFFF00000000ull;
    std::vector<Sample> out;
    out.reserve(n);
    const int k = spec.blur_radius;
    for (std::size_t idx = 0; idx < n; ++idx) {
        Rng rng(mix_seed(stream, idx));
        Sample s;
        s.label = spec.synthetic ? 1 : 0;
        s.style = spec.tag;
        s.id = id_base | static_cast<std::uint64_t>(idx);
        s.pixels.resize(patch_h * patch_w);

        // low-order random trigonometric polynomial orientation field
        const double th0 = rng.uniform(0.0, 3.14159265358979323846);
        double ac[3], as[3];
        for (int c = 0; c < 3; ++c) {
            ac[c] = rng.normal(0.0, spec.orient_smooth);
            as[c] = rng.normal(0.0, spec.orient_smooth);
        }
        const double phase = rng.uniform(0.0, kTwoPi);
        static const double pq[3][2] = {{0, 1}, {1, 0}, {1, 1}};
        for (std::size_t r = 0; r < patch_h; ++r) {
            for (std::size_t c = 0; c < patch_w; ++c) {
                const double u = static_cast<double>(c);
                const double v = static_cast<double>(r);
                double th = th0;
                for (int t = 0; t < 3; ++t) {
                    const double ph = kTwoPi * (pq[t][0] * u + pq[t][1] * v) / 32.0;
                    th += ac[t] * std::cos(ph) + as[t] * std::sin(ph);
                }
                const double ridge =
                    std::sin(kTwoPi * spec.ridge_freq * (u * std::cos(th) + v * std::sin(th)) + phase);
                s.pixels[r * patch_w + c] = 0.5 * (1.0 + ridge);
            }
        }

        if (spec.noise_sigma > 0.0)
            for (auto& px : s.pixels) px += rng.normal(0.0, spec.noise_sigma);

        if (k > 0) {
            // separable box blur with edge clamping
            std::vector<double> tmp(s.pixels.size());
            const double inv = 1.0 / (2 * k + 1);
            for (std::size_t r = 0; r < patch_h; ++r)
                for (std::size_t c = 0; c < patch_w; ++c) {
                    double acc = 0.0;
                    for (int d = -k; d <= k; ++d) {
                        long cc = static_cast<long>(c) + d;
                        cc = std::min<long>(std::max<long>(cc, 0), patch_w - 1);
                        acc += s.pixels[r * patch_w + cc];
                    }
                    tmp[r * patch_w + c] = acc * inv;
                }
            for (std::size_t r = 0; r < patch_h; ++r)
                for (std::size_t c = 0; c < patch_w; ++c) {
                    double acc = 0.0;
                    for (int d = -k; d <= k; ++d) {
                        long rr = static_cast<long>(r) + d;
                        rr = std::min<long>(std::max<long>(rr, 0), patch_h - 1);
                        acc += tmp[rr * patch_w + c];
                    }
                    s.pixels[r * patch_w + c] = acc * inv;
                }
        }

        if (spec.artifact != ArtifactType::kNone && spec.artifact_amp > 0.0) {
            const double amp = spec.artifact_amp;
            for (std::size_t r = 0; r < patch_h; ++r)
                for (std::size_t c = 0; c < patch_w; ++c) {
                    const double u = static_cast<double>(c);
                    const double v = static_cast<double>(r);
                    double& px = s.pixels[r * patch_w + c];
                    switch (spec.artifact) {
                        case ArtifactType::kPeriodicGrid:
                            px += amp * 0.5 *
                                  (std::cos(kTwoPi * u / spec.artifact_period) +
                                   std::cos(kTwoPi * v / spec.artifact_period));
                            break;
                        case ArtifactType::kSpectralPeak:
                            px += amp * std::sin(kTwoPi * (spec.artifact_fx * u + spec.artifact_fy * v));
                            break;
                        case ArtifactType::kChecker: {
                            const long cell = static_cast<long>(spec.artifact_period);
                            const long parity = (static_cast<long>(u) / cell +
                                                 static_cast<long>(v) / cell) % 2;
                            px += amp * (parity ? 1.0 : -1.0);
                            break;
                        }
                        case ArtifactType::kQuantization: {
                            const double L = spec.artifact_levels;
                            px = (1.0 - amp) * px + amp * std::round(px * L) / L;
                            break;
                        }
                        case ArtifactType::kNone: break;
                    }
                }
        }

        for (auto& px : s.pixels) px = std::min(std::max(px, 0.0), 1.0);
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<StyleSpec> default_protocol_styles() {
    std::vector<StyleSpec> styles;
    auto real = [](std::string tag, double freq, double smooth, double sigma, int blur) {
        StyleSpec s;
        s.tag = std::move(tag);
        s.synthetic = false;
        s.ridge_freq = freq;
        s.orient_smooth = smooth;
        s.noise_sigma = sigma;
        s.blur_radius = blur;
        s.base_seed = fnv1a64(s.tag);
        return s;
    };
    styles.push_back(real("R1", 0.14, 0.5, 0.03, 0));
    styles.push_back(real("R2", 0.18, 0.8, 0.05, 0));
    styles.push_back(real("R3", 0.22, 0.3, 0.02, 1));
    styles.push_back(real("R4", 0.12, 0.6, 0.08, 0));
    styles.push_back(real("R5", 0.16, 1.0, 0.04, 1));
    styles.push_back(real("R6", 0.20, 0.4, 0.06, 0));
    styles.push_back(real("R7", 0.25, 0.7, 0.03, 1));
    styles.push_back(real("R8", 0.10, 0.5, 0.05, 0));

    auto syn = [](std::string tag, double freq, double smooth, double sigma, ArtifactType art,
                  double amp) {
        StyleSpec s;
        s.tag = std::move(tag);
        s.synthetic = true;
        s.ridge_freq = freq;
        s.orient_smooth = smooth;
        s.noise_sigma = sigma;
        s.blur_radius = 0;
        s.artifact = art;
        s.artifact_amp = amp;
        s.base_seed = fnv1a64(s.tag);
        return s;
    };
    StyleSpec s0 = syn("S0", 0.16, 0.6, 0.03, ArtifactType::kPeriodicGrid, 0.50);
    s0.artifact_period = 8.0;
    StyleSpec s1 = syn("S1", 0.18, 0.5, 0.04, ArtifactType::kChecker, 0.50);
    s1.artifact_period = 4.0;
    StyleSpec s2 = syn("S2", 0.14, 0.7, 0.03, ArtifactType::kSpectralPeak, 0.45);
    s2.artifact_fx = 0.30;
    s2.artifact_fy = 0.11;
    StyleSpec s3 = syn("S3", 0.20, 0.4, 0.05, ArtifactType::kChecker, 0.40);
    s3.artifact_period = 2.0;
    StyleSpec s4 = syn("S4", 0.16, 0.8, 0.04, ArtifactType::kPeriodicGrid, 0.22);
    s4.artifact_period = 5.0;
    StyleSpec s5 = syn("S5", 0.12, 0.6, 0.03, ArtifactType::kSpectralPeak, 0.16);
    s5.artifact_fx = 0.17;
    s5.artifact_fy = 0.41;
    styles.insert(styles.end(), {s0, s1, s2, s3, s4, s5});
    return styles;
}

SplitResult split(const Dataset& data, double test_fraction, std::uint64_t seed) {
    if (test_fraction <= 0.0 || test_fraction >= 1.0)
        throw std::invalid_argument("split: fraction must be in (0, 1)");
    std::map<std::string, std::vector<std::size_t>> by_style;
    for (std::size_t i = 0; i < data.samples.size(); ++i)
        by_style[data.samples[i].style].push_back(i);

    SplitResult out;
    out.train.patch_h = out.test.patch_h = data.patch_h;
    out.train.patch_w = out.test.patch_w = data.patch_w;
    std::vector<char> is_test(data.samples.size(), 0);
    for (const auto& [tag, idxs] : by_style) {
        const std::size_t n_test =
            static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(idxs.size())));
        Rng rng(mix_seed(seed, fnv1a64(tag)));
        auto pick = rng.sample_without_replacement(idxs.size(), n_test);
        for (std::size_t p : pick) is_test[idxs[p]] = 1;
    }
    for (std::size_t i = 0; i < data.samples.size(); ++i)
        (is_test[i] ? out.test : out.train).samples.push_back(data.samples[i]);
    return out;
}

}  // namespace cfsd
