#pragma once
#include <string>

#include "cfsd/styledata.hpp"

namespace cfsd {

// Binary dataset container (.cfsdat): magic "CFSDAT1", patch extents and
// per-style counts in the header, then one record per sample (little-endian
// f64 pixels, label byte, style index, sample id). load(save(d)) == d
// bitwise; any malformed byte fails with the offending offset and no partial
// dataset is returned.
void save_dataset(const Dataset& d, const std::string& path);
Dataset load_dataset(const std::string& path);

// Plain-text manifest of style specs as structured key-value blocks.
std::string styles_to_manifest(const std::vector<StyleSpec>& styles);
std::vector<StyleSpec> styles_from_manifest(const std::string& text);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace cfsd
