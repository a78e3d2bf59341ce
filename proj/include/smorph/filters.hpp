#ifndef SMORPH_FILTERS_HPP
#define SMORPH_FILTERS_HPP

#include <vector>

#include "smorph/image.hpp"

namespace smorph {

// Patch-wise non-local means. Patch and search sizes are full window widths
// and must be odd. Multi-channel images share weights computed on the channel
// mean.
ImageCrop nlm_denoise(const ImageCrop& img, int patch = 5, int search = 11,
                      float strength = 0.08f);

struct OtsuResult {
    float threshold = 0.0f;  // foreground = pixels strictly below
    bool degenerate = false;
};

// Maximizes inter-class variance over a 256-bin histogram. Ties are resolved
// at the plateau midpoint. Single-channel input only.
OtsuResult otsu_threshold(const ImageCrop& gray);

struct KMeansResult {
    std::vector<int> labels;       // per pixel; -1 outside region
    std::vector<float> centroids;  // ascending, so label 0 is the darkest
    int k_effective = 0;
    bool reduced = false;  // set when fewer distinct values than k
};

// Lloyd's algorithm on scalar intensities restricted to `region` (whole frame
// when null). Centroids start at intensity quantiles, which makes the result
// independent of the seed; the parameter is kept for interface stability.
KMeansResult kmeans_intensity(const ImageCrop& gray, int k, uint64_t seed,
                              const BinaryMask* region = nullptr);

BinaryMask kmeans_label_mask(const KMeansResult& res, int label, int height, int width);

}  // namespace smorph

#endif
