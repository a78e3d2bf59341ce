#ifndef SMORPH_WARP_HPP
#define SMORPH_WARP_HPP

#include <utility>

#include "smorph/image.hpp"

namespace smorph {

enum class Interp { Nearest, Bilinear };

// 2x3 affine map p -> M*p + t in pixel coordinates (x right, y down).
struct Affine {
    double a = 1, b = 0, tx = 0;
    double c = 0, d = 1, ty = 0;

    void apply(double x, double y, double& ox, double& oy) const {
        ox = a * x + b * y + tx;
        oy = c * x + d * y + ty;
    }
    Affine then(const Affine& next) const;  // next ∘ this
    Affine inverse() const;                 // throws std::domain_error if singular
    static Affine identity() { return {}; }
    static Affine rotation_about(double angle_deg, double cx, double cy);
    static Affine scale_about(double factor, double cx, double cy);
    static Affine translation(double dx, double dy);
    static Affine vflip_about(double cy);
};

// Content rotates visually counterclockwise by `angle_deg` about the image
// center. Out-of-frame samples fill with `fill` (1.0 = white background for
// images); masks fill with 0.
ImageCrop rotate(const ImageCrop& img, double angle_deg, Interp interp,
                 float fill = 1.0f);
BinaryMask rotate(const BinaryMask& mask, double angle_deg);

// Exact right-angle rotation (index permutation, no resampling).
ImageCrop rot90(const ImageCrop& img, int quarter_turns);
ImageCrop vflip(const ImageCrop& img);

struct Photometric {
    float brightness = 0.0f;  // additive delta
    float contrast = 0.0f;    // slope delta about 0.5
    float hue = 0.0f;         // hue rotation as a fraction of a full turn
    float saturation = 0.0f;  // multiplicative delta about gray
    bool grayscale = false;
};

// An applied stochastic transform with enough state to invert its geometry.
struct AugmentationRecord {
    double rotation_deg = 0.0;
    bool vflip = false;
    double shift_dx = 0.0;  // fraction of width
    double shift_dy = 0.0;  // fraction of height
    double scale = 1.0;
    Photometric photo;
    uint64_t rng_seed = 0;

    // forward geometry: vflip( shift( rotate( scale(p) ) ) )
    Affine forward_affine(int height, int width) const;
    bool identity_geometry() const;
    static AugmentationRecord identity() { return {}; }
};

struct AugmentationPolicy {
    double max_rotation_deg = 0.0;
    double vflip_prob = 0.0;
    double max_shift_frac = 0.0;
    double scale_min = 1.0;
    double scale_max = 1.0;
    double brightness = 0.0;
    double contrast = 0.0;
    double hue = 0.0;
    double saturation = 0.0;
    double grayscale_prob = 0.0;

    static AugmentationPolicy identity();
    // T1/T2 distillation augmentations: rotation, flip, shift, scale plus
    // photometric jitter and gray conversion.
    static AugmentationPolicy aid_full();
    // milder tuning presets
    static AugmentationPolicy scian_mild();
    static AugmentationPolicy hushem_mild();
    static AugmentationPolicy by_name(const std::string& name);
};

AugmentationRecord sample_record(const AugmentationPolicy& policy, uint64_t seed);

// Geometry (bilinear, white fill) followed by photometric adjustments.
ImageCrop apply_record(const ImageCrop& img, const AugmentationRecord& rec);
std::pair<ImageCrop, AugmentationRecord> apply_augmentation(
    const ImageCrop& img, const AugmentationPolicy& policy, uint64_t seed);

// Geometry only, nearest-neighbor, 0 fill; for warping masks into an
// augmented frame.
BinaryMask warp_mask(const BinaryMask& mask, const AugmentationRecord& rec);

struct InvertedMap {
    FloatPlane map;
    BinaryMask valid;  // pixels that remained in-frame through the round trip
};

// Maps an augmented-frame float map back to the original frame by applying
// the inverse flip, then inverse shift/rotation/scale. Throws
// std::invalid_argument for non-invertible records.
InvertedMap invert_geometric(const FloatPlane& map, const AugmentationRecord& rec);

// Same sampling without the float round-off on stored values; the consistency
// loss uses this to stay within oracle tolerance.
struct InvertedMapD {
    std::vector<double> v;
    BinaryMask valid;
};
InvertedMapD invert_geometric_double(const FloatPlane& map, const AugmentationRecord& rec);

// Adjoint of invert_geometric's sampling: scatters d(loss)/d(inverted map)
// back onto the augmented-frame source map. Accumulates into grad_src.
void invert_geometric_backward(const FloatPlane& grad_inverted,
                               const BinaryMask& valid,
                               const AugmentationRecord& rec,
                               FloatPlane& grad_src);

}  // namespace smorph

#endif
