#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "attune/matrix.hpp"

namespace attune {

/// Integer raster; used both for sketch id grids and PGM transport.
struct IntGrid {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<int> values;  // row-major, height*width

    int at(std::size_t r, std::size_t c) const { return values[r * width + c]; }
    int& at(std::size_t r, std::size_t c) { return values[r * width + c]; }
};

// PGM (portable graymap). Reader accepts P2 (ASCII) and P5 (binary, maxval
// <= 255); writer always emits P2 so outputs stay diffable.
IntGrid read_pgm(std::istream& in);
IntGrid read_pgm_file(const std::filesystem::path& path);
void write_pgm(std::ostream& out, const IntGrid& grid, int maxval);
void write_pgm_file(const std::filesystem::path& path, const IntGrid& grid, int maxval);

// Whitespace-separated integer grid, one raster row per line.
IntGrid read_int_grid(std::istream& in);

/// Maps a matrix to 0..255 per-image (min -> 0, max -> 255); a constant
/// matrix maps to all zeros. Display only — raw values belong in CSV.
IntGrid to_heatmap(const Matrix& values, std::size_t h, std::size_t w);

/// Shortest decimal form that round-trips a double.
std::string format_double(double v);

/// FNV-1a over raw bytes; used for determinism checks.
std::uint64_t fnv1a64(const void* data, std::size_t size);
std::uint64_t checksum(const Matrix& m);
std::string checksum_hex(std::uint64_t h);

}  // namespace attune
