#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "skipstep/batch.hpp"

namespace skipstep {

/// Sample CSV: header "x0,x1,...,x{d-1}", then one row per sample, values
/// printed with 17 significant digits so they round-trip exactly.
void write_batch_csv(const Batch& batch, const std::filesystem::path& path);
Batch read_batch_csv(const std::filesystem::path& path);

// Shortest decimal that round-trips a double.
std::string format_double(double v);

// Creates parent directories as needed.
void ensure_parent_dir(const std::filesystem::path& path);

}  // namespace skipstep
