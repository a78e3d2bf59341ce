#ifndef SMORPH_SYNTH_HPP
#define SMORPH_SYNTH_HPP

#include <utility>

#include "smorph/common.hpp"
#include "smorph/image.hpp"

namespace smorph {

// Parametric sperm crop: a tapered ellipse head with a lighter acrosome cap,
// a darker mid-piece block at the rear, a sinusoidal tail, and a textured
// light background. Membership tests double as exact ground-truth masks.
struct SyntheticSpec {
    int class_id = 0;
    int height = 35;
    int width = 35;
    int channels = 1;

    struct Head {
        double semi_a = 8.0;   // along the facing direction
        double semi_b = 5.0;
        double taper = 0.2;          // rear half-width shrink factor
        double acro_fraction = 0.35; // front fraction forming the acrosome
        float intensity = 0.25f;
        float acro_delta = 0.12f;    // acrosome is this much lighter
        double bump_amp = 0.0;       // boundary perturbation (amorphous)
        int bump_cycles = 3;
        double bump_phase = 0.0;
    } head;

    struct Midpiece {
        double length = 4.0;
        double width = 2.5;
        float intensity = 0.45f;
    } mid;

    struct Tail {
        double length = 10.0;
        double amplitude = 1.5;
        double period = 8.0;
        double width = 1.5;
        float intensity = 0.55f;
    } tail;

    double pose_deg = 0.0;  // facing direction, 0 = right
    float noise_sigma = 0.0f;

    struct Background {
        float base = 0.9f;
        float texture_amp = 0.0f;
        double fx = 0.04, fy = 0.03, phase = 0.0;
    } bg;

    uint64_t seed = 1;

    bool with_midpiece = true;
    bool with_tail = true;
};

struct CropTruth {
    BinaryMask head;
    BinaryMask midpiece;
    BinaryMask tail;
    int class_id = 0;
    double pose_deg = 0.0;
};

// Throws DataError when the head cannot fit in the frame.
std::pair<ImageCrop, CropTruth> generate_crop(const SyntheticSpec& spec);

// Morphology-class presets. Class ids: 0 normal, 1 tapered, 2 pyriform,
// 3 amorphous, 4 small.
SyntheticSpec random_spec(int class_id, int height, int width, int channels,
                          float noise_sigma, Rng& rng);

const char* synth_class_name(int class_id);

}  // namespace smorph

#endif
