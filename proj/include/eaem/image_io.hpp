#pragma once

#include <filesystem>

#include "eaem/imaging.hpp"

namespace eaem::io {

enum class PgmFormat { ascii, binary };

/// 16-bit PGM (P2 or P5) plus a `<path>.json` sidecar holding
/// rad_per_level, offset_rad and pixel_size_nm. Values are quantised linearly
/// between the map's minimum and maximum.
void write_pgm(const std::filesystem::path& path, const PhaseMap& map, PgmFormat format);

/// Reads a P2/P5 map; the sidecar is required to restore radians.
PhaseMap read_pgm(const std::filesystem::path& path);

std::filesystem::path sidecar_path(const std::filesystem::path& pgm);

/// One image row per line, comma separated, full double precision.
void write_csv(const std::filesystem::path& path, const PhaseMap& map);
PhaseMap read_csv(const std::filesystem::path& path, double pixel_size_nm);

/// Dispatch on extension: .pgm or .csv.
PhaseMap read_map(const std::filesystem::path& path, double pixel_size_nm);

} // namespace eaem::io
