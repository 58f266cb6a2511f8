#pragma once

#include <filesystem>

#include "skipstep/mlp.hpp"

namespace skipstep {

/// Binary MLP checkpoint, little-endian:
///   8 bytes  magic "SKSTMLP\0"
///   u32      format version (1)
///   u32      T
///   u32      embed_dim
///   u32      number of widths L
///   u32[L]   widths
///   per layer: f64[out*in] weight (row-major), f64[out] bias
void save_checkpoint(const MlpDenoiser& model, const std::filesystem::path& path);
MlpDenoiser load_checkpoint(const std::filesystem::path& path);

}  // namespace skipstep
