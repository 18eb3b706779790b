#include "cfsd/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

#include "cfsd/dataset_io.hpp"
#include "cfsd/rng.hpp"

namespace cfsd {

namespace {
std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
}  // namespace

void RunConfig::validate() const {
    arch.validate();
    if (base_epochs == 0 || adapt_epochs == 0)
        throw std::invalid_argument("config: epochs must be positive");
    if (base_batch == 0 || adapt_batch == 0)
        throw std::invalid_argument("config: batch sizes must be positive");
    if (lr_max <= 0.0 || lr_min < 0.0 || lr_min > lr_max)
        throw std::invalid_argument("config: need 0 <= lr_min <= lr_max, lr_max > 0");
    if (weight_decay < 0.0) throw std::invalid_argument("config: negative weight decay");
    if (lambda < 0.0) throw std::invalid_argument("config: negative lambda");
    if (beta <= 0.0) throw std::invalid_argument("config: beta must be positive");
    if (tau < 0.0 || tau > 1.0) throw std::invalid_argument("config: tau must be in [0,1]");
    if (fdr_target <= 0.0 || fdr_target >= 1.0)
        throw std::invalid_argument("config: fdr_target must be in (0,1)");
    if (n0 == 0 || shots == 0) throw std::invalid_argument("config: n0/shots must be positive");
    if (validation_fraction <= 0.0 || validation_fraction >= 1.0)
        throw std::invalid_argument("config: validation_fraction must be in (0,1)");
    auto styles = protocol_styles();
    for (std::size_t i = 0; i < styles.size(); ++i)
        for (std::size_t j = i + 1; j < styles.size(); ++j)
            if (styles[i].tag == styles[j].tag)
                throw std::invalid_argument("config: duplicate protocol style '" + styles[i].tag +
                                            "'");
}

std::string RunConfig::serialize() const {
    std::ostringstream os;
    os << "# cfsd run configuration\n";
    os << "patch_h = " << arch.patch_h << "\n";
    os << "patch_w = " << arch.patch_w << "\n";
    os << "extractor_dims =";
    for (std::size_t d : arch.extractor_dims) os << " " << d;
    os << "\n";
    os << "base_epochs = " << base_epochs << "\n";
    os << "base_batch = " << base_batch << "\n";
    os << "adapt_epochs = " << adapt_epochs << "\n";
    os << "adapt_batch = " << adapt_batch << "\n";
    os << "lr_max = " << fmt(lr_max) << "\n";
    os << "lr_min = " << fmt(lr_min) << "\n";
    os << "weight_decay = " << fmt(weight_decay) << "\n";
    os << "lambda = " << fmt(lambda) << "\n";
    os << "beta = " << fmt(beta) << "\n";
    os << "tau = " << fmt(tau) << "\n";
    os << "fdr_target = " << fmt(fdr_target) << "\n";
    os << "n0 = " << n0 << "\n";
    os << "shots = " << shots << "\n";
    os << "replay = " << (replay ? "true" : "false") << "\n";
    os << "balanced_batches = " << (balanced_batches ? "true" : "false") << "\n";
    os << "supcon_norm = " << (supcon_norm == SupconNorm::kPaper ? "paper" : "positives") << "\n";
    os << "real_train = " << real_train << "\n";
    os << "real_test = " << real_test << "\n";
    os << "s0_train = " << s0_train << "\n";
    os << "s0_test = " << s0_test << "\n";
    os << "adapt_test = " << adapt_test << "\n";
    os << "validation_fraction = " << fmt(validation_fraction) << "\n";
    os << "seed = " << seed << "\n";
    if (!out_dir.empty()) os << "out_dir = " << out_dir << "\n";
    if (!style_manifest.empty()) os << "style_manifest = " << style_manifest << "\n";
    return os.str();
}

RunConfig RunConfig::parse(const std::string& text) {
    RunConfig cfg;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        const auto hash_pos = line.find('#');
        if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty()) continue;
        auto to_bool = [&](const std::string& v) {
            if (v == "true" || v == "1") return true;
            if (v == "false" || v == "0") return false;
            throw std::invalid_argument("config: bad boolean for " + key + ": '" + v + "'");
        };
        try {
            if (key == "patch_h") cfg.arch.patch_h = std::stoul(val);
            else if (key == "patch_w") cfg.arch.patch_w = std::stoul(val);
            else if (key == "extractor_dims") {
                cfg.arch.extractor_dims.clear();
                std::istringstream vs(val);
                std::size_t d;
                while (vs >> d) cfg.arch.extractor_dims.push_back(d);
            } else if (key == "base_epochs") cfg.base_epochs = std::stoul(val);
            else if (key == "base_batch") cfg.base_batch = std::stoul(val);
            else if (key == "adapt_epochs") cfg.adapt_epochs = std::stoul(val);
            else if (key == "adapt_batch") cfg.adapt_batch = std::stoul(val);
            else if (key == "lr_max") cfg.lr_max = std::stod(val);
            else if (key == "lr_min") cfg.lr_min = std::stod(val);
            else if (key == "weight_decay") cfg.weight_decay = std::stod(val);
            else if (key == "lambda") cfg.lambda = std::stod(val);
            else if (key == "beta") cfg.beta = std::stod(val);
            else if (key == "tau") cfg.tau = std::stod(val);
            else if (key == "fdr_target") cfg.fdr_target = std::stod(val);
            else if (key == "n0") cfg.n0 = std::stoul(val);
            else if (key == "shots") cfg.shots = std::stoul(val);
            else if (key == "replay") cfg.replay = to_bool(val);
            else if (key == "balanced_batches") cfg.balanced_batches = to_bool(val);
            else if (key == "supcon_norm") {
                if (val == "paper") cfg.supcon_norm = SupconNorm::kPaper;
                else if (val == "positives") cfg.supcon_norm = SupconNorm::kPositives;
                else throw std::invalid_argument("config: supcon_norm must be paper|positives");
            } else if (key == "real_train") cfg.real_train = std::stoul(val);
            else if (key == "real_test") cfg.real_test = std::stoul(val);
            else if (key == "s0_train") cfg.s0_train = std::stoul(val);
            else if (key == "s0_test") cfg.s0_test = std::stoul(val);
            else if (key == "adapt_test") cfg.adapt_test = std::stoul(val);
            else if (key == "validation_fraction") cfg.validation_fraction = std::stod(val);
            else if (key == "seed") cfg.seed = std::stoull(val);
            else if (key == "out_dir") cfg.out_dir = val;
            else if (key == "style_manifest") cfg.style_manifest = val;
            else throw std::invalid_argument("config: unknown key '" + key + "'");
        } catch (const std::invalid_argument&) {
            throw;
        } catch (const std::exception&) {
            throw std::invalid_argument("config: bad value for " + key + ": '" + val + "'");
        }
    }
    return cfg;
}

RunConfig RunConfig::load(const std::string& path) { return parse(read_text_file(path)); }

std::uint64_t RunConfig::hash() const { return fnv1a64(serialize()); }

std::vector<StyleSpec> RunConfig::protocol_styles() const {
    if (style_manifest.empty()) return default_protocol_styles();
    return styles_from_manifest(read_text_file(style_manifest));
}

std::string resolve_out_dir(const std::string& flag_value, const RunConfig& cfg) {
    if (!flag_value.empty()) return flag_value;
    if (!cfg.out_dir.empty()) return cfg.out_dir;
    if (const char* env = std::getenv("CFSD_OUT"); env && *env) return env;
    return "cfsd-out";
}

}  // namespace cfsd
