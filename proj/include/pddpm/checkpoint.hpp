#pragma once

#include "pddpm/convnet.hpp"

#include <string>

namespace pddpm {

/// Versioned binary checkpoint: magic "PDSN", u32 format version, config
/// block (u32 depth, width, L, C, T), then every weight tensor in
/// declaration order as little-endian f32 with a (u32 rank, u32 dims...)
/// shape prefix. Matrices are written column-major.
void save_checkpoint(const std::string& path, const ConvScoreNetF& net);

ConvScoreNetF load_checkpoint(const std::string& path);

}  // namespace pddpm
