#ifndef SMORPH_IMAGE_HPP
#define SMORPH_IMAGE_HPP

#include <cstdint>
#include <vector>

#include "smorph/common.hpp"

namespace smorph {

// Raster crop with row-major interleaved storage, intensities in [0,1].
struct ImageCrop {
    int height = 0;
    int width = 0;
    int channels = 1;
    std::vector<float> data;  // data[(y*width + x)*channels + c]

    ImageCrop() = default;
    ImageCrop(int h, int w, int c, float fill = 0.0f)
        : height(h), width(w), channels(c),
          data(size_t(h) * size_t(w) * size_t(c), fill) {}

    float at(int y, int x, int c = 0) const {
        return data[(size_t(y) * width + x) * channels + c];
    }
    float& at(int y, int x, int c = 0) {
        return data[(size_t(y) * width + x) * channels + c];
    }
    size_t pixel_count() const { return size_t(height) * size_t(width); }
    bool same_shape(const ImageCrop& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }
    // Checks the type invariants: finite intensities in [0,1], consistent size.
    bool valid() const;
    void clamp01();
};

struct BinaryMask {
    int height = 0;
    int width = 0;
    std::vector<uint8_t> bits;  // 0 or 1, row-major

    BinaryMask() = default;
    BinaryMask(int h, int w, uint8_t fill = 0)
        : height(h), width(w), bits(size_t(h) * size_t(w), fill) {}

    uint8_t at(int y, int x) const { return bits[size_t(y) * width + x]; }
    void set(int y, int x, uint8_t v) { bits[size_t(y) * width + x] = v ? 1 : 0; }
    size_t count() const;
    bool empty() const { return count() == 0; }
    bool same_shape(const BinaryMask& o) const {
        return height == o.height && width == o.width;
    }
    bool is_subset_of(const BinaryMask& o) const;
};

BinaryMask mask_and(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_or(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_not(const BinaryMask& a);
// a minus b
BinaryMask mask_diff(const BinaryMask& a, const BinaryMask& b);
double mask_iou(const BinaryMask& a, const BinaryMask& b);

// Channel mean. Single-channel images pass through.
ImageCrop to_gray(const ImageCrop& img);

ImageCrop resize_bilinear(const ImageCrop& img, int out_h, int out_w);
BinaryMask resize_nearest(const BinaryMask& mask, int out_h, int out_w);

// Single-channel float plane; the raster payload behind probability maps.
struct FloatPlane {
    int height = 0;
    int width = 0;
    std::vector<float> v;

    FloatPlane() = default;
    FloatPlane(int h, int w, float fill = 0.0f)
        : height(h), width(w), v(size_t(h) * size_t(w), fill) {}
    float at(int y, int x) const { return v[size_t(y) * width + x]; }
    float& at(int y, int x) { return v[size_t(y) * width + x]; }
};

}  // namespace smorph

#endif
