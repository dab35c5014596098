#pragma once

#include "favk/raster.hpp"

namespace favk {

// Grayscale PNG I/O. 8-bit values scale by 1/255, 16-bit by 1/65535; RGB(A)
// inputs are collapsed to luma before scaling. Masks are written as 8-bit
// 0/255 and read back with a 128 cutoff, so save/load round-trips bit-exactly.

GrayImage load_gray(const std::string& path);
SoftMap load_soft(const std::string& path);
BinaryMask load_mask(const std::string& path);

/// Writes 16-bit grayscale, value = round(v * 65535).
void save_gray(const GrayImage& img, const std::string& path);
/// Writes 16-bit grayscale, value = round(p * 65535).
void save_soft(const SoftMap& map, const std::string& path);
/// Writes 8-bit grayscale, vessel = 255, background = 0.
void save_mask(const BinaryMask& mask, const std::string& path);

}  // namespace favk
