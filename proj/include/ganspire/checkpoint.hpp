#pragma once

// Checkpoint file layout:
//
//   8 bytes   magic "GSPCKPT1"
//   8 bytes   header length N, little-endian uint64
//   N bytes   JSON header {format, config, step, fid_history, tensors}
//   ...       float32 little-endian arrays in header "tensors" order
//
// Every tensor entry records {name, offset, count}, offsets in floats from
// the start of the array block.

#include <cstdint>
#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "ganspire/generator.hpp"

namespace ganspire::gan {

struct FidRecord {
    std::int64_t step = 0;
    double value = 0.0;
    bool operator==(const FidRecord&) const = default;
};

struct Checkpoint {
    Model model;
    std::int64_t step = 0;
    std::vector<FidRecord> fid_history;  // strictly increasing in step
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
// Throws ParseError on a malformed or truncated file.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ganspire::gan
