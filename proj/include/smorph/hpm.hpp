#ifndef SMORPH_HPM_HPP
#define SMORPH_HPM_HPP

#include "smorph/hierarchy.hpp"
#include "smorph/image.hpp"
#include "smorph/morphology.hpp"

namespace smorph {

struct HpmParams {
    int hierarchy_levels = 2;       // h; 2 for gray 35x35 crops, 1 for clean RGB
    double height_tolerance = 0.15; // tau_h in the acrosome erosion stop rule
    double dmax_factor = 1.5;       // distance cut as a multiple of the fitted semi-axis
    int nlm_patch = 5;
    int nlm_search = 11;
    float nlm_strength = 0.08f;
    // denoise strength for the clustering pass: the foreground rescale in
    // step 1 stretches noise along with signal, so clustering needs a
    // stronger filter than raw thresholding does
    float cluster_nlm_strength = 0.18f;
    int kmeans_k = 3;
    int min_nucleus_px = 10;
};

enum class HeadDirection { Left, Right };

struct CoarseForeground {
    BinaryMask mask;       // m1: largest dark component
    ImageCrop whitened;    // I1: foreground rescaled, background forced to 1.0
    uint32_t flags = 0;
};

struct NuclearExtract {
    BinaryMask nucleus;  // n1
    HeadDirection direction = HeadDirection::Right;
    double angle_deg = 0.0;  // fitted major-axis angle
    uint32_t flags = 0;
};

struct AlignedCrops {
    ImageCrop image;      // I2
    BinaryMask coarse;    // m2
    BinaryMask nucleus;   // n2
    double rotation_applied = 0.0;  // in (-180, 180]
};

struct PseudoMaskResult {
    ImageCrop aligned_image;
    MaskHierarchy hierarchy;
    double rotation_applied = 0.0;
    BinaryMask nuclear_mask;
    uint32_t quality_flags = 0;
};

// Step 1: denoise, threshold, keep the largest dark component; rescale
// foreground intensities and whiten the background.
CoarseForeground coarse_foreground(const ImageCrop& img, const HpmParams& params = {});

// Step 2 (analysis half): darkest k-means segment, distance filtering, ellipse
// orientation, and the thicker-end direction vote.
NuclearExtract nuclear_extract(const ImageCrop& whitened, const BinaryMask& coarse,
                               uint64_t seed, const HpmParams& params = {});

// Step 2 (rotation half): rotate everything so the head faces right.
AlignedCrops align_right(const ImageCrop& whitened, const BinaryMask& coarse,
                         const BinaryMask& nucleus, double angle_deg,
                         HeadDirection direction);

// Step 3: split the aligned coarse mask at its centroid, erode the right part
// down to the nucleus height band, and fuse.
BinaryMask fuse_acrosome(const BinaryMask& coarse_aligned, const BinaryMask& nucleus_aligned,
                         const HpmParams& params, uint32_t* flags);

// Step 4: concentric dilations of the fused mask, bounded by the aligned
// coarse mask.
MaskHierarchy build_hierarchy(const BinaryMask& fused, const BinaryMask& bound, int h,
                              uint32_t* flags);

// Steps 1-4 composed; never throws on degenerate crops (flags instead).
PseudoMaskResult hpm_pipeline(const ImageCrop& img, int h, uint64_t seed,
                              const HpmParams& params = {});

}  // namespace smorph

#endif
