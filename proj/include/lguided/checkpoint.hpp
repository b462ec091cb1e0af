#pragma once

#include <string>

#include "lguided/model.hpp"

namespace lguided {

// Versioned binary container: magic "LGDL", u32 version, length-prefixed JSON
// block (hyperparameters, vocabulary, labels), then named tensor blocks
// {u32 name_len, name, u32 rows, u32 cols, f64 data little-endian}.
// save -> load -> save is byte-identical.
inline constexpr char kCheckpointMagic[4] = {'L', 'G', 'D', 'L'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const Model& model, const std::string& path);

// Throws IoError on unreadable/corrupt/truncated files and on version
// mismatch.
Model load_checkpoint(const std::string& path);

// Write-to-temp-then-rename, so readers never observe a partial file.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace lguided
