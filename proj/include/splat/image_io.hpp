#pragma once

#include <string>

#include "splat/raster.hpp"

namespace splat {

/// 8-bit codecs convert via value/255 on load and round(value*255),
/// clamped, on save.

Raster load_image(const std::string& path);  // dispatches on extension
void save_image(const Raster& img, const std::string& path);

Raster load_png(const std::string& path);
void save_png(const Raster& img, const std::string& path);

/// Binary PPM (P6) for 3-channel, PGM (P5) for 1-channel fixtures.
Raster load_pnm(const std::string& path);
void save_pnm(const Raster& img, const std::string& path);

/// Masks persist as PGM with 0/255 values.
BinaryMask load_mask_pgm(const std::string& path);
void save_mask_pgm(const BinaryMask& mask, const std::string& path);

/// PFM (Pf, little-endian float) — lossless sidecar for attention maps.
Raster load_pfm(const std::string& path);
void save_pfm(const Raster& img, const std::string& path);

}  // namespace splat
