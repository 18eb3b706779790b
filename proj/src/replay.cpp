#include "cfsd/replay.hpp"

#include <sstream>
#include <stdexcept>

#include "cfsd/rng.hpp"

namespace cfsd {

ReplayBuffer ReplayBuffer::init(const Dataset& d0, std::size_t n0, std::uint64_t seed) {
    ReplayBuffer buf;
    std::map<std::string, std::vector<const Sample*>> by_style;
    for (const auto& s : d0.samples) by_style[s.style].push_back(&s);
    // insertion order follows first appearance in d0, not map order
    for (const auto& tag : d0.style_order()) {
        const auto& pool = by_style.at(tag);
        if (pool.empty()) throw std::invalid_argument("replay init: style with no samples");
        Rng rng(mix_seed(seed, fnv1a64(tag)));
        auto pick = rng.sample_without_replacement(pool.size(), std::min(n0, pool.size()));
        std::vector<Sample> kept;
        kept.reserve(pick.size());
        for (std::size_t i : pick) kept.push_back(*pool[i]);
        buf.order_.push_back(tag);
        buf.quota_[tag] = n0;
        buf.retained_[tag] = std::move(kept);
    }
    return buf;
}

void ReplayBuffer::extend(const std::vector<Sample>& dk) {
    if (dk.empty()) throw std::invalid_argument("replay extend: empty adaptation set");
    const std::string& tag = dk.front().style;
    for (const auto& s : dk)
        if (s.style != tag)
            throw std::invalid_argument("replay extend: adaptation set must be single-style");
    if (has_style(tag))
        throw std::invalid_argument("replay extend: style '" + tag + "' already known");
    order_.push_back(tag);
    quota_[tag] = dk.size();
    retained_[tag] = dk;
}

std::vector<Sample> ReplayBuffer::assemble() const {
    if (order_.empty()) throw std::invalid_argument("replay assemble: empty buffer");
    std::vector<Sample> out;
    out.reserve(total_count());
    for (const auto& tag : order_)
        for (const auto& s : retained_.at(tag)) out.push_back(s);
    return out;
}

std::size_t ReplayBuffer::total_count() const {
    std::size_t n = 0;
    for (const auto& [tag, v] : retained_) n += v.size();
    return n;
}

bool ReplayBuffer::has_style(const std::string& tag) const { return quota_.count(tag) > 0; }

const std::vector<Sample>& ReplayBuffer::retained(const std::string& tag) const {
    auto it = retained_.find(tag);
    if (it == retained_.end()) throw std::invalid_argument("replay: unknown style '" + tag + "'");
    return it->second;
}

std::size_t ReplayBuffer::quota(const std::string& tag) const {
    auto it = quota_.find(tag);
    if (it == quota_.end()) throw std::invalid_argument("replay: unknown style '" + tag + "'");
    return it->second;
}

std::string ReplayBuffer::snapshot() const {
    std::ostringstream os;
    os << "cfsd-buffer v1\n";
    for (const auto& tag : order_) {
        os << "style " << tag << "\n";
        os << "quota " << quota_.at(tag) << "\n";
        os << "ids";
        for (const auto& s : retained_.at(tag)) os << " " << s.id;
        os << "\n";
    }
    return os.str();
}

ReplayBuffer ReplayBuffer::restore(const std::string& snapshot_text,
                                   const std::map<std::string, std::vector<Sample>>& style_pools) {
    std::istringstream is(snapshot_text);
    std::string line;
    if (!std::getline(is, line) || line != "cfsd-buffer v1")
        throw std::runtime_error("buffer snapshot: bad header");
    ReplayBuffer buf;
    std::string tag;
    std::size_t quota = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "style") {
            ls >> tag;
        } else if (key == "quota") {
            ls >> quota;
        } else if (key == "ids") {
            auto pit = style_pools.find(tag);
            if (pit == style_pools.end())
                throw std::runtime_error("buffer snapshot: no pool for style '" + tag + "'");
            std::map<std::uint64_t, const Sample*> by_id;
            for (const auto& s : pit->second) by_id[s.id] = &s;
            std::vector<Sample> kept;
            std::uint64_t id;
            while (ls >> id) {
                auto sit = by_id.find(id);
                if (sit == by_id.end())
                    throw std::runtime_error("buffer snapshot: sample id not in pool for '" + tag +
                                             "'");
                kept.push_back(*sit->second);
            }
            buf.order_.push_back(tag);
            buf.quota_[tag] = quota;
            buf.retained_[tag] = std::move(kept);
        } else {
            throw std::runtime_error("buffer snapshot: unexpected line '" + line + "'");
        }
    }
    return buf;
}

}  // namespace cfsd
