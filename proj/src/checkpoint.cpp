#include "cfsd/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace cfsd {

namespace {
constexpr char kMagic[5] = {'C', 'F', 'S', 'D', '1'};

void put(std::ofstream& os, const void* p, std::size_t n) {
    os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}
void put_u32(std::ofstream& os, std::uint32_t v) { put(os, &v, 4); }
void put_u64(std::ofstream& os, std::uint64_t v) { put(os, &v, 8); }
void put_f64v(std::ofstream& os, const std::vector<double>& v) {
    put(os, v.data(), v.size() * sizeof(double));
}

struct In {
    std::ifstream is;
    std::string path;
    std::size_t offset = 0;
    explicit In(const std::string& p) : is(p, std::ios::binary), path(p) {
        if (!is) throw std::runtime_error("cannot open checkpoint '" + p + "'");
    }
    void get(void* p, std::size_t n) {
        is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (is.gcount() != static_cast<std::streamsize>(n))
            throw std::runtime_error("checkpoint '" + path + "' truncated at offset " +
                                     std::to_string(offset));
        offset += n;
    }
    std::uint32_t u32() { std::uint32_t v; get(&v, 4); return v; }
    std::uint64_t u64() { std::uint64_t v; get(&v, 8); return v; }
    std::uint8_t u8() { std::uint8_t v; get(&v, 1); return v; }
    void f64v(std::vector<double>& v) { get(v.data(), v.size() * sizeof(double)); }
};
}  // namespace

void save_checkpoint(const DetectorParams& params, const std::string& path,
                     const OptState* opt_state) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
    put(os, kMagic, sizeof(kMagic));
    put_u32(os, static_cast<std::uint32_t>(params.arch.patch_h));
    put_u32(os, static_cast<std::uint32_t>(params.arch.patch_w));
    put_u32(os, static_cast<std::uint32_t>(params.arch.extractor_dims.size()));
    for (std::size_t d : params.arch.extractor_dims) put_u64(os, d);
    const std::uint8_t flags = opt_state ? 1 : 0;
    put(os, &flags, 1);
    put_u32(os, static_cast<std::uint32_t>(params.weights.size()));
    for (const auto& w : params.weights) {
        put_u32(os, static_cast<std::uint32_t>(w->shape.size()));
        for (std::size_t e : w->shape) put_u64(os, e);
        put_f64v(os, w->value);
    }
    if (opt_state) {
        put_u64(os, opt_state->t);
        put_u64(os, opt_state->cfg.total_steps);
        const double hp[5] = {opt_state->cfg.lr_max, opt_state->cfg.lr_min,
                              opt_state->cfg.weight_decay, opt_state->cfg.beta1,
                              opt_state->cfg.beta2};
        put(os, hp, sizeof(hp));
        put(os, &opt_state->cfg.eps, 8);
        for (const auto& m : opt_state->m) put_f64v(os, m);
        for (const auto& v : opt_state->v) put_f64v(os, v);
    }
    if (!os) throw std::runtime_error("checkpoint write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
    In in(path);
    char magic[sizeof(kMagic)];
    in.get(magic, sizeof(magic));
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("checkpoint '" + path + "': bad magic");
    Checkpoint ck;
    ck.params.arch.patch_h = in.u32();
    ck.params.arch.patch_w = in.u32();
    const std::uint32_t n_dims = in.u32();
    if (n_dims == 0 || n_dims > 64)
        throw std::runtime_error("checkpoint '" + path + "': extractor dim count out of range");
    ck.params.arch.extractor_dims.resize(n_dims);
    for (auto& d : ck.params.arch.extractor_dims) d = in.u64();
    ck.params.arch.validate();
    const std::uint8_t flags = in.u8();
    const std::uint32_t n_weights = in.u32();
    ck.params.weights.reserve(n_weights);
    for (std::uint32_t i = 0; i < n_weights; ++i) {
        const std::uint32_t nd = in.u32();
        if (nd == 0 || nd > 8)
            throw std::runtime_error("checkpoint '" + path + "': weight rank out of range");
        std::vector<std::size_t> shape(nd);
        for (auto& e : shape) {
            e = in.u64();
            if (e == 0 || e > (1ull << 24))
                throw std::runtime_error("checkpoint '" + path + "': weight extent out of range");
        }
        auto t = make_tensor(shape);
        in.f64v(t->value);
        ck.params.weights.push_back(std::move(t));
    }
    // declared layout check: 2 tensors per extractor layer plus 4 head tensors
    const std::size_t expected = 2 * (ck.params.arch.extractor_dims.size() - 1) + 4;
    if (ck.params.weights.size() != expected)
        throw std::runtime_error("checkpoint '" + path + "': weight block count mismatch");
    if (flags & 1) {
        OptState st;
        st.t = in.u64();
        st.cfg.total_steps = in.u64();
        double hp[5];
        in.get(hp, sizeof(hp));
        st.cfg.lr_max = hp[0];
        st.cfg.lr_min = hp[1];
        st.cfg.weight_decay = hp[2];
        st.cfg.beta1 = hp[3];
        st.cfg.beta2 = hp[4];
        in.get(&st.cfg.eps, 8);
        for (const auto& w : ck.params.weights) st.m.emplace_back(w->size(), 0.0);
        for (const auto& w : ck.params.weights) st.v.emplace_back(w->size(), 0.0);
        for (auto& m : st.m) in.f64v(m);
        for (auto& v : st.v) in.f64v(v);
        ck.opt_state = std::move(st);
    }
    return ck;
}

}  // namespace cfsd
