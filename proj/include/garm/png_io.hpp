#pragma once

#include <cstdint>
#include <string>

#include "garm/common.hpp"
#include "garm/percept.hpp"

namespace garm::harness {

/// Minimal 8-bit grayscale PNG writer (zlib-backed).
void write_gray_png(const std::string& path, const Grid<std::uint8_t>& image);

Grid<std::uint8_t> mask_image(const MaskGrid& mask);

/// Height in meters scaled into [0, 255]; max_height_m clips the range.
Grid<std::uint8_t> height_image(const ValueGrid& height, double max_height_m = 0.3);

/// Min-max normalized; non-finite (masked) values render black.
Grid<std::uint8_t> value_image(const ValueGrid& values);

/// Mask image with a small crosshair drawn at the pixel.
Grid<std::uint8_t> overlay_image(const MaskGrid& mask, const Pixel& pixel);

}  // namespace garm::harness
