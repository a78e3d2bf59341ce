#ifndef SMORPH_PNG_IO_HPP
#define SMORPH_PNG_IO_HPP

#include <string>

#include "smorph/image.hpp"

namespace smorph {

// 8-bit grayscale or RGB PNG. Intensities map linearly to [0,1].
ImageCrop read_png(const std::string& path);
void write_png(const std::string& path, const ImageCrop& img);

// Masks are stored as grayscale PNG with 0 = background, 255 = foreground.
BinaryMask read_mask_png(const std::string& path);
void write_mask_png(const std::string& path, const BinaryMask& mask);

}  // namespace smorph

#endif
