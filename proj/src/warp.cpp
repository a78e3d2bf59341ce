#include "smorph/warp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace smorph {

Affine Affine::then(const Affine& n) const {
    Affine r;
    r.a = n.a * a + n.b * c;
    r.b = n.a * b + n.b * d;
    r.tx = n.a * tx + n.b * ty + n.tx;
    r.c = n.c * a + n.d * c;
    r.d = n.c * b + n.d * d;
    r.ty = n.c * tx + n.d * ty + n.ty;
    return r;
}

Affine Affine::inverse() const {
    double det = a * d - b * c;
    if (std::abs(det) < 1e-12) throw std::domain_error("Affine::inverse: singular");
    Affine r;
    r.a = d / det;
    r.b = -b / det;
    r.c = -c / det;
    r.d = a / det;
    r.tx = -(r.a * tx + r.b * ty);
    r.ty = -(r.c * tx + r.d * ty);
    return r;
}

Affine Affine::rotation_about(double angle_deg, double cx, double cy) {
    // visually counterclockwise on screen (y axis points down)
    double rad = angle_deg * M_PI / 180.0;
    double cs = std::cos(rad), sn = std::sin(rad);
    Affine r;
    r.a = cs;
    r.b = sn;
    r.c = -sn;
    r.d = cs;
    r.tx = cx - cs * cx - sn * cy;
    r.ty = cy + sn * cx - cs * cy;
    return r;
}

Affine Affine::scale_about(double factor, double cx, double cy) {
    Affine r;
    r.a = factor;
    r.d = factor;
    r.tx = cx * (1.0 - factor);
    r.ty = cy * (1.0 - factor);
    return r;
}

Affine Affine::translation(double dx, double dy) {
    Affine r;
    r.tx = dx;
    r.ty = dy;
    return r;
}

Affine Affine::vflip_about(double cy) {
    Affine r;
    r.d = -1;
    r.ty = 2.0 * cy;
    return r;
}

namespace {

// Sample a single channel at real-valued coordinates; neighbors clamp at the
// border, fully out-of-frame positions return `fill`.
inline double sample_bilinear(const float* data, int H, int W, int C, int ch,
                              double x, double y, double fill) {
    if (x < 0.0 || x > W - 1.0 || y < 0.0 || y > H - 1.0) {
        // allow the half-pixel border to still read the edge pixel
        if (x < -0.5 || x > W - 0.5 || y < -0.5 || y > H - 0.5) return fill;
    }
    int x0 = int(std::floor(x)), y0 = int(std::floor(y));
    double wx = x - x0, wy = y - y0;
    int x0c = std::clamp(x0, 0, W - 1), x1c = std::clamp(x0 + 1, 0, W - 1);
    int y0c = std::clamp(y0, 0, H - 1), y1c = std::clamp(y0 + 1, 0, H - 1);
    auto at = [&](int yy, int xx) {
        return double(data[(size_t(yy) * W + xx) * C + ch]);
    };
    return (1 - wy) * ((1 - wx) * at(y0c, x0c) + wx * at(y0c, x1c)) +
           wy * ((1 - wx) * at(y1c, x0c) + wx * at(y1c, x1c));
}

inline bool in_frame(double x, double y, int H, int W) {
    // tolerant border test: exact right-angle transforms land on the frame
    // edge up to rounding, and validity must not flicker there
    constexpr double eps = 1e-9;
    return x >= -eps && x <= W - 1.0 + eps && y >= -eps && y <= H - 1.0 + eps;
}

ImageCrop warp_image(const ImageCrop& img, const Affine& inv, Interp interp, float fill) {
    ImageCrop out(img.height, img.width, img.channels);
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            double sx, sy;
            inv.apply(x, y, sx, sy);
            for (int c = 0; c < img.channels; ++c) {
                double v;
                if (interp == Interp::Nearest) {
                    int xi = int(std::lround(sx)), yi = int(std::lround(sy));
                    v = (xi < 0 || xi >= img.width || yi < 0 || yi >= img.height)
                            ? fill
                            : img.at(yi, xi, c);
                } else {
                    v = sample_bilinear(img.data.data(), img.height, img.width,
                                        img.channels, c, sx, sy, fill);
                }
                out.at(y, x, c) = float(std::clamp(v, 0.0, 1.0));
            }
        }
    }
    return out;
}

void rgb_to_hsv(float r, float g, float b, float& h, float& s, float& v) {
    float mx = std::max({r, g, b}), mn = std::min({r, g, b});
    v = mx;
    float d = mx - mn;
    s = mx <= 0.0f ? 0.0f : d / mx;
    if (d <= 0.0f) {
        h = 0.0f;
        return;
    }
    if (mx == r) h = (g - b) / d + (g < b ? 6.0f : 0.0f);
    else if (mx == g) h = (b - r) / d + 2.0f;
    else h = (r - g) / d + 4.0f;
    h /= 6.0f;
}

void hsv_to_rgb(float h, float s, float v, float& r, float& g, float& b) {
    h = h - std::floor(h);
    float i = std::floor(h * 6.0f);
    float f = h * 6.0f - i;
    float p = v * (1.0f - s);
    float q = v * (1.0f - f * s);
    float t = v * (1.0f - (1.0f - f) * s);
    switch (int(i) % 6) {
        case 0: r = v; g = t; b = p; break;
        case 1: r = q; g = v; b = p; break;
        case 2: r = p; g = v; b = t; break;
        case 3: r = p; g = q; b = v; break;
        case 4: r = t; g = p; b = v; break;
        default: r = v; g = p; b = q; break;
    }
}

void apply_photometric(ImageCrop& img, const Photometric& ph) {
    const bool has_hsv = img.channels == 3 && (ph.hue != 0.0f || ph.saturation != 0.0f);
    const bool has_bright = ph.brightness != 0.0f;
    const bool has_contrast = ph.contrast != 0.0f;
    const bool has_gray = ph.grayscale && img.channels == 3;
    if (!has_hsv && !has_bright && !has_contrast && !has_gray) return;
    const size_t n = img.pixel_count();
    for (size_t i = 0; i < n; ++i) {
        float* px = &img.data[i * img.channels];
        if (has_hsv) {
            float h, s, v;
            rgb_to_hsv(px[0], px[1], px[2], h, s, v);
            h += ph.hue;
            s = std::clamp(s * (1.0f + ph.saturation), 0.0f, 1.0f);
            hsv_to_rgb(h, s, v, px[0], px[1], px[2]);
        }
        if (has_bright || has_contrast) {
            for (int c = 0; c < img.channels; ++c) {
                float v = px[c];
                if (has_bright) v += ph.brightness;
                if (has_contrast) v = 0.5f + (v - 0.5f) * (1.0f + ph.contrast);
                px[c] = std::clamp(v, 0.0f, 1.0f);
            }
        }
        if (has_gray) {
            float m = (px[0] + px[1] + px[2]) / 3.0f;
            px[0] = px[1] = px[2] = m;
        }
    }
}

}  // namespace

Affine AugmentationRecord::forward_affine(int height, int width) const {
    if (!(scale > 1e-6)) throw std::invalid_argument("augmentation record: non-invertible scale");
    double cx = (width - 1) / 2.0, cy = (height - 1) / 2.0;
    Affine fwd = Affine::scale_about(scale, cx, cy)
                     .then(Affine::rotation_about(rotation_deg, cx, cy))
                     .then(Affine::translation(shift_dx * width, shift_dy * height));
    if (vflip) fwd = fwd.then(Affine::vflip_about(cy));
    return fwd;
}

bool AugmentationRecord::identity_geometry() const {
    return rotation_deg == 0.0 && !vflip && shift_dx == 0.0 && shift_dy == 0.0 &&
           scale == 1.0;
}

ImageCrop rotate(const ImageCrop& img, double angle_deg, Interp interp, float fill) {
    if (!std::isfinite(angle_deg)) throw std::invalid_argument("rotate: angle must be finite");
    if (angle_deg == 0.0) return img;
    double cx = (img.width - 1) / 2.0, cy = (img.height - 1) / 2.0;
    Affine inv = Affine::rotation_about(-angle_deg, cx, cy);
    return warp_image(img, inv, interp, fill);
}

BinaryMask rotate(const BinaryMask& mask, double angle_deg) {
    if (!std::isfinite(angle_deg)) throw std::invalid_argument("rotate: angle must be finite");
    if (angle_deg == 0.0) return mask;
    double cx = (mask.width - 1) / 2.0, cy = (mask.height - 1) / 2.0;
    Affine inv = Affine::rotation_about(-angle_deg, cx, cy);
    BinaryMask out(mask.height, mask.width);
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x) {
            double sx, sy;
            inv.apply(x, y, sx, sy);
            int xi = int(std::lround(sx)), yi = int(std::lround(sy));
            if (xi >= 0 && xi < mask.width && yi >= 0 && yi < mask.height)
                out.set(y, x, mask.at(yi, xi));
        }
    return out;
}

ImageCrop rot90(const ImageCrop& img, int quarter_turns) {
    int k = ((quarter_turns % 4) + 4) % 4;
    ImageCrop cur = img;
    for (int t = 0; t < k; ++t) {
        ImageCrop next(cur.width, cur.height, cur.channels);
        for (int y = 0; y < next.height; ++y)
            for (int x = 0; x < next.width; ++x)
                for (int c = 0; c < cur.channels; ++c)
                    next.at(y, x, c) = cur.at(x, cur.width - 1 - y, c);
        cur = std::move(next);
    }
    return cur;
}

ImageCrop vflip(const ImageCrop& img) {
    ImageCrop out(img.height, img.width, img.channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c)
                out.at(y, x, c) = img.at(img.height - 1 - y, x, c);
    return out;
}

AugmentationPolicy AugmentationPolicy::identity() { return {}; }

AugmentationPolicy AugmentationPolicy::aid_full() {
    AugmentationPolicy p;
    p.max_rotation_deg = 10.0;
    p.vflip_prob = 0.5;
    p.max_shift_frac = 0.10;
    p.scale_min = 0.6;
    p.scale_max = 1.0;
    p.brightness = 0.2;
    p.contrast = 0.2;
    p.hue = 0.05;
    p.saturation = 0.3;
    p.grayscale_prob = 0.2;
    return p;
}

AugmentationPolicy AugmentationPolicy::scian_mild() {
    AugmentationPolicy p;
    p.max_rotation_deg = 10.0;
    p.vflip_prob = 0.5;
    p.max_shift_frac = 0.06;
    return p;
}

AugmentationPolicy AugmentationPolicy::hushem_mild() {
    AugmentationPolicy p;
    p.max_rotation_deg = 0.0;
    p.vflip_prob = 0.5;
    p.max_shift_frac = 0.10;
    p.hue = 0.5;
    p.saturation = 0.3;
    p.brightness = 0.5;
    p.contrast = 0.2;
    p.grayscale_prob = 1.0;
    return p;
}

AugmentationPolicy AugmentationPolicy::by_name(const std::string& name) {
    if (name == "identity") return identity();
    if (name == "aid-full") return aid_full();
    if (name == "scian-mild") return scian_mild();
    if (name == "hushem-mild") return hushem_mild();
    throw UsageError("unknown augmentation policy: " + name);
}

AugmentationRecord sample_record(const AugmentationPolicy& policy, uint64_t seed) {
    Rng rng(seed);
    AugmentationRecord rec;
    rec.rng_seed = seed;
    rec.rotation_deg = rng.uniform(-policy.max_rotation_deg, policy.max_rotation_deg);
    rec.vflip = rng.bernoulli(policy.vflip_prob);
    rec.shift_dx = rng.uniform(-policy.max_shift_frac, policy.max_shift_frac);
    rec.shift_dy = rng.uniform(-policy.max_shift_frac, policy.max_shift_frac);
    rec.scale = rng.uniform(policy.scale_min, policy.scale_max);
    rec.photo.brightness = float(rng.uniform(-policy.brightness, policy.brightness));
    rec.photo.contrast = float(rng.uniform(-policy.contrast, policy.contrast));
    rec.photo.hue = float(rng.uniform(-policy.hue, policy.hue));
    rec.photo.saturation = float(rng.uniform(-policy.saturation, policy.saturation));
    rec.photo.grayscale = rng.bernoulli(policy.grayscale_prob);
    return rec;
}

ImageCrop apply_record(const ImageCrop& img, const AugmentationRecord& rec) {
    ImageCrop out = rec.identity_geometry()
                        ? img
                        : warp_image(img, rec.forward_affine(img.height, img.width).inverse(),
                                     Interp::Bilinear, 1.0f);
    apply_photometric(out, rec.photo);
    return out;
}

std::pair<ImageCrop, AugmentationRecord> apply_augmentation(
    const ImageCrop& img, const AugmentationPolicy& policy, uint64_t seed) {
    AugmentationRecord rec = sample_record(policy, seed);
    return {apply_record(img, rec), rec};
}

BinaryMask warp_mask(const BinaryMask& mask, const AugmentationRecord& rec) {
    if (rec.identity_geometry()) return mask;
    Affine inv = rec.forward_affine(mask.height, mask.width).inverse();
    BinaryMask out(mask.height, mask.width);
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x) {
            double sx, sy;
            inv.apply(x, y, sx, sy);
            int xi = int(std::lround(sx)), yi = int(std::lround(sy));
            if (xi >= 0 && xi < mask.width && yi >= 0 && yi < mask.height)
                out.set(y, x, mask.at(yi, xi));
        }
    return out;
}

namespace {

// shared inverse-warp sampler: inverse flip first, then inverse
// shift/rotation/scale, which is exactly sampling the augmented map at the
// forward-transformed position
template <typename Store>
void invert_geometric_impl(const FloatPlane& map, const AugmentationRecord& rec,
                           Store&& store, BinaryMask& valid) {
    const int H = map.height, W = map.width;
    Affine fwd = rec.forward_affine(H, W);
    Affine inv = fwd.inverse();
    // a pixel of the augmented map carries real content only if its own
    // source position was in frame during the forward warp
    auto content_ok = [&](int qx, int qy) {
        double ox, oy;
        inv.apply(qx, qy, ox, oy);
        return in_frame(ox, oy, H, W);
    };
    valid = BinaryMask(H, W);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            double sx, sy;
            fwd.apply(x, y, sx, sy);
            if (!in_frame(sx, sy, H, W)) continue;
            int x0 = int(std::floor(sx)), y0 = int(std::floor(sy));
            double wx = sx - x0, wy = sy - y0;
            int x0c = std::clamp(x0, 0, W - 1), x1c = std::clamp(x0 + 1, 0, W - 1);
            int y0c = std::clamp(y0, 0, H - 1), y1c = std::clamp(y0 + 1, 0, H - 1);
            if (!content_ok(x0c, y0c) || !content_ok(x1c, y0c) ||
                !content_ok(x0c, y1c) || !content_ok(x1c, y1c))
                continue;
            valid.set(y, x, 1);
            double v = (1 - wy) * ((1 - wx) * map.at(y0c, x0c) + wx * map.at(y0c, x1c)) +
                       wy * ((1 - wx) * map.at(y1c, x0c) + wx * map.at(y1c, x1c));
            store(y, x, v);
        }
}

}  // namespace

InvertedMap invert_geometric(const FloatPlane& map, const AugmentationRecord& rec) {
    InvertedMap out;
    out.map = FloatPlane(map.height, map.width, 0.0f);
    invert_geometric_impl(
        map, rec, [&](int y, int x, double v) { out.map.at(y, x) = float(v); },
        out.valid);
    return out;
}

InvertedMapD invert_geometric_double(const FloatPlane& map, const AugmentationRecord& rec) {
    InvertedMapD out;
    out.v.assign(size_t(map.height) * map.width, 0.0);
    invert_geometric_impl(
        map, rec,
        [&](int y, int x, double v) { out.v[size_t(y) * map.width + x] = v; },
        out.valid);
    return out;
}

void invert_geometric_backward(const FloatPlane& grad_inverted,
                               const BinaryMask& valid,
                               const AugmentationRecord& rec,
                               FloatPlane& grad_src) {
    const int H = grad_inverted.height, W = grad_inverted.width;
    Affine fwd = rec.forward_affine(H, W);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            if (!valid.at(y, x)) continue;
            double g = grad_inverted.at(y, x);
            if (g == 0.0) continue;
            double sx, sy;
            fwd.apply(x, y, sx, sy);
            int x0 = int(std::floor(sx)), y0 = int(std::floor(sy));
            double wx = sx - x0, wy = sy - y0;
            int x0c = std::clamp(x0, 0, W - 1), x1c = std::clamp(x0 + 1, 0, W - 1);
            int y0c = std::clamp(y0, 0, H - 1), y1c = std::clamp(y0 + 1, 0, H - 1);
            grad_src.at(y0c, x0c) += float(g * (1 - wy) * (1 - wx));
            grad_src.at(y0c, x1c) += float(g * (1 - wy) * wx);
            grad_src.at(y1c, x0c) += float(g * wy * (1 - wx));
            grad_src.at(y1c, x1c) += float(g * wy * wx);
        }
}

}  // namespace smorph
