#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "blurmeter/raster.hpp"

namespace blurmeter {

/// Decodes PNG, TIFF or PGM (P2/P5), detected from the file signature.
/// Alpha channels are dropped; integer samples keep their raw values with
/// max_value set from the bit depth (255, 65535, or the PGM maxval).
MultiBandImage read_image(const std::filesystem::path& path);

/// Reads and reduces to a single [0,1] band.
Raster read_grayscale(const std::filesystem::path& path);

/// Writes a [0,1] raster, quantized to `bit_depth` (8 or 16). The container
/// is chosen from the extension: .png, .tif/.tiff, or .pgm.
void write_image(const std::filesystem::path& path, const Raster& image,
                 int bit_depth = 16);

void write_png_gray(const std::filesystem::path& path, int width, int height,
                    int bit_depth, const std::vector<std::uint16_t>& samples);

}  // namespace blurmeter
