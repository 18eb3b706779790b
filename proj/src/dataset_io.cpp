#include "cfsd/dataset_io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace cfsd {

namespace {
constexpr char kMagic[7] = {'C', 'F', 'S', 'D', 'A', 'T', '1'};

std::string format_manifest_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

class Writer {
public:
    explicit Writer(const std::string& path) : os_(path, std::ios::binary) {
        if (!os_) throw std::runtime_error("cannot open '" + path + "' for writing");
    }
    void bytes(const void* p, std::size_t n) { os_.write(static_cast<const char*>(p), n); }
    void u8(std::uint8_t v) { bytes(&v, 1); }
    void u32(std::uint32_t v) { bytes(&v, 4); }
    void u64(std::uint64_t v) { bytes(&v, 8); }
    void f64(double v) { bytes(&v, 8); }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }
    bool good() const { return static_cast<bool>(os_); }

private:
    std::ofstream os_;
};

class Reader {
public:
    explicit Reader(const std::string& path) : is_(path, std::ios::binary), path_(path) {
        if (!is_) throw std::runtime_error("cannot open '" + path + "' for reading");
    }
    void bytes(void* p, std::size_t n) {
        is_.read(static_cast<char*>(p), n);
        if (is_.gcount() != static_cast<std::streamsize>(n)) fail("truncated file");
        offset_ += n;
    }
    std::uint8_t u8() { std::uint8_t v; bytes(&v, 1); return v; }
    std::uint32_t u32() { std::uint32_t v; bytes(&v, 4); return v; }
    std::uint64_t u64() { std::uint64_t v; bytes(&v, 8); return v; }
    double f64() { double v; bytes(&v, 8); return v; }
    std::string str(std::uint32_t max_len = 1u << 20) {
        const std::uint32_t n = u32();
        if (n > max_len) fail("string length out of range");
        std::string s(n, '\0');
        bytes(s.data(), n);
        return s;
    }
    [[noreturn]] void fail(const std::string& what) const {
        throw std::runtime_error("dataset format error in '" + path_ + "' at offset " +
                                 std::to_string(offset_) + ": " + what);
    }
    std::size_t offset() const { return offset_; }

private:
    std::ifstream is_;
    std::string path_;
    std::size_t offset_ = 0;
};
}  // namespace

void save_dataset(const Dataset& d, const std::string& path) {
    // header counts must match the records, and ids must be unique
    std::vector<std::string> order = d.style_order();
    std::map<std::string, std::uint64_t> counts;
    std::set<std::uint64_t> ids;
    for (const auto& s : d.samples) {
        counts[s.style]++;
        if (s.pixels.size() != d.patch_h * d.patch_w)
            throw std::invalid_argument("save_dataset: sample pixel count mismatch");
        if (!ids.insert(s.id).second)
            throw std::invalid_argument("save_dataset: duplicate sample id " + std::to_string(s.id));
    }

    Writer w(path);
    w.bytes(kMagic, sizeof(kMagic));
    w.u32(static_cast<std::uint32_t>(d.patch_h));
    w.u32(static_cast<std::uint32_t>(d.patch_w));
    w.u32(static_cast<std::uint32_t>(order.size()));
    for (const auto& tag : order) {
        w.str(tag);
        w.u64(counts[tag]);
    }
    w.u64(d.samples.size());
    std::map<std::string, std::uint32_t> style_index;
    for (std::uint32_t i = 0; i < order.size(); ++i) style_index[order[i]] = i;
    for (const auto& s : d.samples) {
        w.u32(style_index.at(s.style));
        w.u64(s.id);
        w.u8(static_cast<std::uint8_t>(s.label));
        for (double px : s.pixels) w.f64(px);
    }
    if (!w.good()) throw std::runtime_error("save_dataset: write failed for '" + path + "'");
}

Dataset load_dataset(const std::string& path) {
    Reader r(path);
    char magic[sizeof(kMagic)];
    r.bytes(magic, sizeof(magic));
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) r.fail("bad magic");
    Dataset d;
    d.patch_h = r.u32();
    d.patch_w = r.u32();
    if (d.patch_h == 0 || d.patch_w == 0 || d.patch_h > 4096 || d.patch_w > 4096)
        r.fail("patch extents out of range");
    const std::uint32_t n_styles = r.u32();
    if (n_styles > 1u << 16) r.fail("style count out of range");
    std::vector<std::string> tags(n_styles);
    std::vector<std::uint64_t> counts(n_styles);
    std::uint64_t total = 0;
    for (std::uint32_t i = 0; i < n_styles; ++i) {
        tags[i] = r.str(4096);
        if (tags[i].empty()) r.fail("empty style tag");
        counts[i] = r.u64();
        total += counts[i];
    }
    const std::uint64_t n_records = r.u64();
    if (n_records != total) r.fail("record count does not match per-style counts");

    d.samples.reserve(n_records);
    std::vector<std::uint64_t> seen(n_styles, 0);
    std::set<std::uint64_t> ids;
    for (std::uint64_t i = 0; i < n_records; ++i) {
        Sample s;
        const std::uint32_t si = r.u32();
        if (si >= n_styles) r.fail("style index out of range");
        s.style = tags[si];
        seen[si]++;
        s.id = r.u64();
        if (!ids.insert(s.id).second) r.fail("duplicate sample id");
        const std::uint8_t label = r.u8();
        if (label > 1) r.fail("label out of range");
        s.label = label;
        s.pixels.resize(d.patch_h * d.patch_w);
        for (auto& px : s.pixels) px = r.f64();
        d.samples.push_back(std::move(s));
    }
    for (std::uint32_t i = 0; i < n_styles; ++i)
        if (seen[i] != counts[i]) r.fail("per-style record count mismatch");
    return d;
}

std::string styles_to_manifest(const std::vector<StyleSpec>& styles) {
    std::ostringstream os;
    os << "cfsd-styles v1\n";
    for (const auto& s : styles) {
        os << "\n[style]\n";
        os << "tag = " << s.tag << "\n";
        os << "class = " << (s.synthetic ? "synthetic-analog" : "real-analog") << "\n";
        os << "ridge_freq = " << format_manifest_double(s.ridge_freq) << "\n";
        os << "orient_smooth = " << format_manifest_double(s.orient_smooth) << "\n";
        os << "noise_sigma = " << format_manifest_double(s.noise_sigma) << "\n";
        os << "blur_radius = " << s.blur_radius << "\n";
        os << "artifact = " << artifact_name(s.artifact) << "\n";
        os << "artifact_amp = " << format_manifest_double(s.artifact_amp) << "\n";
        os << "artifact_period = " << format_manifest_double(s.artifact_period) << "\n";
        os << "artifact_fx = " << format_manifest_double(s.artifact_fx) << "\n";
        os << "artifact_fy = " << format_manifest_double(s.artifact_fy) << "\n";
        os << "artifact_levels = " << s.artifact_levels << "\n";
        os << "base_seed = " << s.base_seed << "\n";
    }
    return os.str();
}

std::vector<StyleSpec> styles_from_manifest(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line) || line != "cfsd-styles v1")
        throw std::runtime_error("style manifest: bad header");
    std::vector<StyleSpec> out;
    StyleSpec cur;
    bool open = false;
    auto flush = [&] {
        if (open) {
            cur.validate();
            out.push_back(cur);
        }
    };
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line == "[style]") {
            flush();
            cur = StyleSpec{};
            open = true;
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos || !open)
            throw std::runtime_error("style manifest: unexpected line '" + line + "'");
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key == "tag") cur.tag = val;
        else if (key == "class") cur.synthetic = (val == "synthetic-analog");
        else if (key == "ridge_freq") cur.ridge_freq = std::stod(val);
        else if (key == "orient_smooth") cur.orient_smooth = std::stod(val);
        else if (key == "noise_sigma") cur.noise_sigma = std::stod(val);
        else if (key == "blur_radius") cur.blur_radius = std::stoi(val);
        else if (key == "artifact") cur.artifact = artifact_from_name(val);
        else if (key == "artifact_amp") cur.artifact_amp = std::stod(val);
        else if (key == "artifact_period") cur.artifact_period = std::stod(val);
        else if (key == "artifact_fx") cur.artifact_fx = std::stod(val);
        else if (key == "artifact_fy") cur.artifact_fy = std::stod(val);
        else if (key == "artifact_levels") cur.artifact_levels = std::stoi(val);
        else if (key == "base_seed") cur.base_seed = std::stoull(val);
        else throw std::runtime_error("style manifest: unknown key '" + key + "'");
    }
    flush();
    return out;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!os) throw std::runtime_error("write failed for '" + path + "'");
}

std::string read_text_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace cfsd
