#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "pcatlas/atlas.hpp"

namespace pcatlas {

// 8-bit RGB PNG, rows top to bottom, 3 bytes per pixel.
std::string encode_png_rgb(std::uint32_t width, std::uint32_t height,
                           std::span<const std::uint8_t> rgb);

// Offset channels min-max normalized per channel over valid pixels; holes
// are black. For eyeballing only.
std::string atlas_preview_png(const Atlas& atlas);

}  // namespace pcatlas
