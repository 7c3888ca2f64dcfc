#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "crackseg/raster.hpp"

namespace crackseg {

using Bytes = std::vector<std::uint8_t>;

/// Decodes 8- or 16-bit gray / gray+alpha / RGB / RGBA / palette PNGs.
/// Alpha is dropped; values are scaled to [0, 1].
RasterImage decode_image(std::span<const std::uint8_t> png);
RasterImage load_image(const std::filesystem::path& path);

/// 8-bit encoding (values rounded from [0, 1] to 0..255).
Bytes encode_image(const RasterImage& image);
void save_image(const RasterImage& image, const std::filesystem::path& path);

/// Masks are 8-bit grayscale, 0 = background, 255 = crack. Any other
/// value is rejected with its position.
BinaryMask decode_mask(std::span<const std::uint8_t> png);
BinaryMask load_mask(const std::filesystem::path& path);
Bytes encode_mask(const BinaryMask& mask);
void save_mask(const BinaryMask& mask, const std::filesystem::path& path);

/// Probability maps round-trip through 16-bit grayscale.
ProbabilityMap decode_probability_map(std::span<const std::uint8_t> png);
ProbabilityMap load_probability_map(const std::filesystem::path& path);
Bytes encode_probability_map(const ProbabilityMap& map);
void save_probability_map(const ProbabilityMap& map, const std::filesystem::path& path);

Bytes read_file(const std::filesystem::path& path);
/// Writes to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace crackseg
