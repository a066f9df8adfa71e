#pragma once

#include "flarekit/image.hpp"

#include <filesystem>

namespace flarekit {

enum class ImageFormat { Png8, Png16, Pfm };

/// Png16 for ".png", Pfm for ".pfm"; throws FormatError otherwise.
ImageFormat format_from_extension(const std::filesystem::path& path);

/// Loads PNG (8 or 16 bit; gray, gray+alpha, RGB or RGBA; alpha dropped) or
/// colour PFM. PNG samples are normalised as v / (2^bits - 1) and tagged
/// Encoded(png_gamma). PFM domain comes from the header scale: magnitude 1
/// means Linear, any other magnitude g means Encoded(g).
Image load_image(const std::filesystem::path& path, double png_gamma = kNominalGamma);

/// PNG output clamps to [0, 1] and rounds to the nearest code value; Linear
/// images cannot be written as PNG. PFM output is little-endian float32.
void save_image(const std::filesystem::path& path, const Image& img, ImageFormat format);
void save_image(const std::filesystem::path& path, const Image& img);

/// 8-bit grayscale PNG, 0 or 255.
void save_mask(const std::filesystem::path& path, const Mask& mask);
/// Any PNG; a pixel is set when its first channel exceeds half scale.
Mask load_mask(const std::filesystem::path& path);

} // namespace flarekit
