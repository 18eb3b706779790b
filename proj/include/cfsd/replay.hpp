#pragma once
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cfsd/styledata.hpp"

namespace cfsd {

// Experience-replay memory: per-style bounded stores of retained samples.
// Mutated only between training stages; read-only while a stage trains.
class ReplayBuffer {
public:
    // Retains min(n0, available) samples per style of the initial dataset,
    // chosen uniformly without replacement. The union of retained lists is
    // the replay core every later adaptation set builds on.
    static ReplayBuffer init(const Dataset& d0, std::size_t n0, std::uint64_t seed);

    // Stores every sample of a single-style adaptation set under its new
    // style key (quota = set size). Re-adapting a known style is a protocol
    // violation.
    void extend(const std::vector<Sample>& dk);

    // Concatenation of all retained lists in style insertion order (and
    // retention order within a style). Shuffling is the trainer's job.
    std::vector<Sample> assemble() const;

    std::size_t total_count() const;
    bool has_style(const std::string& tag) const;
    const std::vector<std::string>& style_order() const { return order_; }
    const std::vector<Sample>& retained(const std::string& tag) const;
    std::size_t quota(const std::string& tag) const;

    // Snapshot = style keys, quotas and retained sample identifiers; with
    // deterministic regeneration this is enough to rebuild the buffer
    // exactly, so runs can resume mid-protocol.
    std::string snapshot() const;
    static ReplayBuffer restore(const std::string& snapshot_text,
                                const std::map<std::string, std::vector<Sample>>& style_pools);

private:
    std::vector<std::string> order_;
    std::map<std::string, std::vector<Sample>> retained_;
    std::map<std::string, std::size_t> quota_;
};

}  // namespace cfsd
