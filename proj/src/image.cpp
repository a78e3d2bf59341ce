#include "smorph/image.hpp"

#include <algorithm>
#include <cmath>

namespace smorph {

bool ImageCrop::valid() const {
    if (height <= 0 || width <= 0 || (channels != 1 && channels != 3)) return false;
    if (data.size() != size_t(height) * size_t(width) * size_t(channels)) return false;
    for (float v : data) {
        if (!std::isfinite(v) || v < 0.0f || v > 1.0f) return false;
    }
    return true;
}

void ImageCrop::clamp01() {
    for (float& v : data) v = std::clamp(v, 0.0f, 1.0f);
}

size_t BinaryMask::count() const {
    size_t n = 0;
    for (uint8_t b : bits) n += b;
    return n;
}

bool BinaryMask::is_subset_of(const BinaryMask& o) const {
    if (!same_shape(o)) return false;
    for (size_t i = 0; i < bits.size(); ++i) {
        if (bits[i] && !o.bits[i]) return false;
    }
    return true;
}

BinaryMask mask_and(const BinaryMask& a, const BinaryMask& b) {
    BinaryMask out(a.height, a.width);
    for (size_t i = 0; i < a.bits.size(); ++i) out.bits[i] = a.bits[i] & b.bits[i];
    return out;
}

BinaryMask mask_or(const BinaryMask& a, const BinaryMask& b) {
    BinaryMask out(a.height, a.width);
    for (size_t i = 0; i < a.bits.size(); ++i) out.bits[i] = a.bits[i] | b.bits[i];
    return out;
}

BinaryMask mask_not(const BinaryMask& a) {
    BinaryMask out(a.height, a.width);
    for (size_t i = 0; i < a.bits.size(); ++i) out.bits[i] = a.bits[i] ? 0 : 1;
    return out;
}

BinaryMask mask_diff(const BinaryMask& a, const BinaryMask& b) {
    BinaryMask out(a.height, a.width);
    for (size_t i = 0; i < a.bits.size(); ++i) out.bits[i] = a.bits[i] & (b.bits[i] ? 0 : 1);
    return out;
}

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
    size_t inter = 0, uni = 0;
    for (size_t i = 0; i < a.bits.size(); ++i) {
        inter += a.bits[i] & b.bits[i];
        uni += a.bits[i] | b.bits[i];
    }
    return uni == 0 ? 1.0 : double(inter) / double(uni);
}

ImageCrop to_gray(const ImageCrop& img) {
    if (img.channels == 1) return img;
    ImageCrop out(img.height, img.width, 1);
    const size_t n = img.pixel_count();
    for (size_t i = 0; i < n; ++i) {
        float s = 0.0f;
        for (int c = 0; c < img.channels; ++c) s += img.data[i * img.channels + c];
        out.data[i] = s / float(img.channels);
    }
    return out;
}

ImageCrop resize_bilinear(const ImageCrop& img, int out_h, int out_w) {
    if (out_h <= 0 || out_w <= 0) throw std::invalid_argument("resize: bad output dims");
    if (out_h == img.height && out_w == img.width) return img;
    ImageCrop out(out_h, out_w, img.channels);
    const double sy = double(img.height) / out_h;
    const double sx = double(img.width) / out_w;
    for (int y = 0; y < out_h; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        int y0 = int(std::floor(fy));
        double wy = fy - y0;
        int y0c = std::clamp(y0, 0, img.height - 1);
        int y1c = std::clamp(y0 + 1, 0, img.height - 1);
        for (int x = 0; x < out_w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            int x0 = int(std::floor(fx));
            double wx = fx - x0;
            int x0c = std::clamp(x0, 0, img.width - 1);
            int x1c = std::clamp(x0 + 1, 0, img.width - 1);
            for (int c = 0; c < img.channels; ++c) {
                double v00 = img.at(y0c, x0c, c);
                double v01 = img.at(y0c, x1c, c);
                double v10 = img.at(y1c, x0c, c);
                double v11 = img.at(y1c, x1c, c);
                double v = (1 - wy) * ((1 - wx) * v00 + wx * v01) +
                           wy * ((1 - wx) * v10 + wx * v11);
                out.at(y, x, c) = float(v);
            }
        }
    }
    return out;
}

BinaryMask resize_nearest(const BinaryMask& mask, int out_h, int out_w) {
    if (out_h <= 0 || out_w <= 0) throw std::invalid_argument("resize: bad output dims");
    if (out_h == mask.height && out_w == mask.width) return mask;
    BinaryMask out(out_h, out_w);
    const double sy = double(mask.height) / out_h;
    const double sx = double(mask.width) / out_w;
    for (int y = 0; y < out_h; ++y) {
        int yi = std::clamp(int(std::floor((y + 0.5) * sy)), 0, mask.height - 1);
        for (int x = 0; x < out_w; ++x) {
            int xi = std::clamp(int(std::floor((x + 0.5) * sx)), 0, mask.width - 1);
            out.set(y, x, mask.at(yi, xi));
        }
    }
    return out;
}

}  // namespace smorph
