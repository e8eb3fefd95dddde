#pragma once

#include <string>

#include "ftdr/image.hpp"

namespace ftdr::io {

// Binary PPM (P6) / PGM (P5), 8-bit, maxval 255. Values map to [0,1] by /255.
Image load_image(const std::string& path);
// Writes P6 for 3-channel images, P5 for single-channel; round-half-up.
void save_image(const std::string& path, const Image& image);

// P5 mask: pixels >= 128 become 1 (corrupted), others 0.
BinaryMask load_mask(const std::string& path);
// Writes a P5 mask with 255 = corrupted.
void save_mask(const std::string& path, const BinaryMask& mask);

// Rescales an arbitrary (H,W) map to [0,1] and writes it as P5 (all-equal
// maps save as zeros).
void save_heatmap(const std::string& path, const Tensor& map);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace ftdr::io
