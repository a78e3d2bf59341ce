#include "smorph/hpm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "smorph/filters.hpp"
#include "smorph/warp.hpp"

namespace smorph {

namespace {

double normalize_angle(double deg) {
    while (deg > 180.0) deg -= 360.0;
    while (deg <= -180.0) deg += 360.0;
    return deg;
}

}  // namespace

CoarseForeground coarse_foreground(const ImageCrop& img, const HpmParams& params) {
    CoarseForeground out;
    ImageCrop gray = to_gray(img);
    ImageCrop denoised =
        nlm_denoise(gray, params.nlm_patch, params.nlm_search, params.nlm_strength);
    OtsuResult otsu = otsu_threshold(denoised);

    if (otsu.degenerate) {
        out.flags |= kFlagDegenerateThreshold;
        out.mask = BinaryMask(img.height, img.width, 1);  // full frame fallback
        out.whitened = img;
        return out;
    }

    // stained cells are dark: foreground is the dark side of the threshold
    BinaryMask dark(img.height, img.width);
    for (int i = 0; i < img.height * img.width; ++i)
        dark.bits[i] = denoised.data[i] < otsu.threshold ? 1 : 0;
    out.mask = largest_component(dark);
    if (out.mask.empty()) {
        out.flags |= kFlagDegenerateThreshold;
        out.mask = BinaryMask(img.height, img.width, 1);
        out.whitened = img;
        return out;
    }

    // min-max rescale of foreground intensities, white background
    float lo = 1.0f, hi = 0.0f;
    for (int i = 0; i < img.height * img.width; ++i) {
        if (!out.mask.bits[i]) continue;
        for (int c = 0; c < img.channels; ++c) {
            float v = img.data[size_t(i) * img.channels + c];
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    float range = hi - lo;
    out.whitened = ImageCrop(img.height, img.width, img.channels, 1.0f);
    for (int i = 0; i < img.height * img.width; ++i) {
        if (!out.mask.bits[i]) continue;
        for (int c = 0; c < img.channels; ++c) {
            float v = img.data[size_t(i) * img.channels + c];
            out.whitened.data[size_t(i) * img.channels + c] =
                range > 1e-6f ? std::clamp((v - lo) / range, 0.0f, 1.0f) : v;
        }
    }
    return out;
}

NuclearExtract nuclear_extract(const ImageCrop& whitened, const BinaryMask& coarse,
                               uint64_t seed, const HpmParams& params) {
    if (coarse.empty()) throw std::invalid_argument("nuclear_extract: empty coarse mask");
    NuclearExtract out;
    // cluster on a denoised copy: raw per-pixel noise (amplified by the
    // foreground rescale) fragments the darkest cluster on thin heads
    ImageCrop gray = nlm_denoise(to_gray(whitened), params.nlm_patch,
                                 params.nlm_search, params.cluster_nlm_strength);

    KMeansResult km = kmeans_intensity(gray, params.kmeans_k, seed, &coarse);
    if (km.reduced) out.flags |= kFlagReducedClusters;
    BinaryMask darkest = kmeans_label_mask(km, 0, gray.height, gray.width);
    if (darkest.empty()) darkest = coarse;  // degenerate fallback

    // distance threshold from the largest component of the tentative nucleus
    BinaryMask core = largest_component(darkest);
    BinaryMask filtered = darkest;
    if (!core.empty()) {
        Centroid c = mask_centroid(core);
        double d_max = std::numeric_limits<double>::max();
        if (core.count() >= 5) {
            try {
                EllipseParams e = fit_ellipse(core);
                d_max = params.dmax_factor * (e.major_axis / 2.0);
            } catch (const std::exception&) {
                // keep unlimited distance on degenerate cores
            }
        }
        filtered = BinaryMask(darkest.height, darkest.width);
        for (int y = 0; y < darkest.height; ++y)
            for (int x = 0; x < darkest.width; ++x) {
                if (!darkest.at(y, x)) continue;
                double dx = x - c.x, dy = y - c.y;
                if (std::sqrt(dx * dx + dy * dy) <= d_max) filtered.set(y, x, 1);
            }
    }
    if (filtered.empty()) filtered = core.empty() ? coarse : core;
    if (int(filtered.count()) < params.min_nucleus_px) out.flags |= kFlagTinyNucleus;
    out.nucleus = filtered;

    // fit orientation on the closed largest component: speckles from noisy
    // cluster boundaries would otherwise dominate the moments
    BinaryMask fit_mask = largest_component(filtered);
    if (!fit_mask.empty()) {
        BinaryMask closed = erode(dilate(fit_mask, 1), 1);
        if (closed.count() >= 5) fit_mask = closed;
    }
    if (fit_mask.count() < 5) fit_mask = filtered;

    // ambiguous fits fall back to 0 degrees
    double angle = 0.0;
    try {
        angle = fit_ellipse(fit_mask).angle_deg;
    } catch (const std::exception&) {
        out.flags |= kFlagAmbiguousOrientation;
    }
    out.angle_deg = angle;

    // thicker end: split at the midpoint of the nucleus extent along the
    // major axis and compare the mean perpendicular width of the two halves.
    // Splitting at the centroid or comparing raw pixel counts both flip on
    // quantization noise for mildly tapered heads.
    Centroid c = mask_centroid(fit_mask);
    const double rad = angle * M_PI / 180.0;
    const double dx_axis = std::cos(rad), dy_axis = -std::sin(rad);  // y down
    std::vector<double> along, across;
    along.reserve(fit_mask.count());
    for (int y = 0; y < fit_mask.height; ++y)
        for (int x = 0; x < fit_mask.width; ++x)
            if (fit_mask.at(y, x)) {
                along.push_back((x - c.x) * dx_axis + (y - c.y) * dy_axis);
                across.push_back(std::abs(-(x - c.x) * dy_axis + (y - c.y) * dx_axis));
            }
    std::vector<double> sorted_along = along;
    std::sort(sorted_along.begin(), sorted_along.end());
    // robust extent: trim 2% from each end against stray noise pixels
    const size_t n = sorted_along.size();
    double lo = sorted_along[size_t(0.02 * double(n - 1))];
    double hi = sorted_along[size_t(0.98 * double(n - 1))];
    double mid = (lo + hi) / 2.0;
    double width_pos = 0.0, width_neg = 0.0;
    long n_pos = 0, n_neg = 0;
    for (size_t i = 0; i < along.size(); ++i) {
        if (along[i] > mid + 1e-12) {
            width_pos += across[i];
            ++n_pos;
        } else if (along[i] < mid - 1e-12) {
            width_neg += across[i];
            ++n_neg;
        }
    }
    double mean_pos = n_pos ? width_pos / double(n_pos) : 0.0;
    double mean_neg = n_neg ? width_neg / double(n_neg) : 0.0;
    if (mean_pos == mean_neg) {
        out.flags |= kFlagAmbiguousOrientation;
        out.direction = HeadDirection::Right;
    } else {
        out.direction = mean_pos > mean_neg ? HeadDirection::Right : HeadDirection::Left;
    }
    return out;
}

AlignedCrops align_right(const ImageCrop& whitened, const BinaryMask& coarse,
                         const BinaryMask& nucleus, double angle_deg,
                         HeadDirection direction) {
    AlignedCrops out;
    double rotation = direction == HeadDirection::Right ? -angle_deg : -angle_deg + 180.0;
    out.rotation_applied = normalize_angle(rotation);
    out.image = rotate(whitened, out.rotation_applied, Interp::Bilinear, 1.0f);
    out.coarse = rotate(coarse, out.rotation_applied);
    out.nucleus = rotate(nucleus, out.rotation_applied);
    return out;
}

BinaryMask fuse_acrosome(const BinaryMask& coarse_aligned,
                         const BinaryMask& nucleus_aligned, const HpmParams& params,
                         uint32_t* flags) {
    uint32_t local_flags = 0;
    BinaryMask fused;
    if (coarse_aligned.empty() || nucleus_aligned.empty()) {
        local_flags |= kFlagEmptyAcrosome;
        fused = largest_component(nucleus_aligned.empty() ? coarse_aligned : nucleus_aligned);
        if (flags) *flags |= local_flags;
        return fused;
    }

    Centroid c = mask_centroid(coarse_aligned);
    BinaryMask acro(coarse_aligned.height, coarse_aligned.width);
    for (int y = 0; y < coarse_aligned.height; ++y)
        for (int x = 0; x < coarse_aligned.width; ++x)
            if (coarse_aligned.at(y, x) && x >= c.x) acro.set(y, x, 1);

    BBox nucleus_box = mask_bbox(nucleus_aligned);
    const int target_height =
        int(std::floor(double(nucleus_box.height()) * (1.0 + params.height_tolerance)));

    // erode one step at a time until the acrosome band is near the nucleus
    // height, or the mask is about to vanish
    while (!acro.empty() && mask_bbox(acro).height() > target_height &&
           erosions_until_empty(acro) > 3) {
        BinaryMask next = erode(acro, 1);
        if (next.bits == acro.bits) break;  // fixed point at the frame border
        acro = std::move(next);
    }

    if (acro.empty()) {
        local_flags |= kFlagEmptyAcrosome;
        fused = largest_component(nucleus_aligned);
    } else {
        fused = largest_component(mask_or(nucleus_aligned, acro));
    }
    if (flags) *flags |= local_flags;
    return fused;
}

MaskHierarchy build_hierarchy(const BinaryMask& fused, const BinaryMask& bound, int h,
                              uint32_t* flags) {
    if (h < 1) throw std::invalid_argument("build_hierarchy: h must be >= 1");
    MaskHierarchy hier;
    hier.bound = bound;
    BinaryMask base = fused;
    if (!fused.is_subset_of(bound)) {
        base = mask_and(fused, bound);
        if (flags) *flags |= kFlagClippedHierarchy;
    }
    for (int i = 0; i < h; ++i)
        hier.layers.push_back(i == 0 ? base : mask_and(dilate(base, i), bound));
    return hier;
}

PseudoMaskResult hpm_pipeline(const ImageCrop& img, int h, uint64_t seed,
                              const HpmParams& params) {
    PseudoMaskResult res;
    CoarseForeground coarse = coarse_foreground(img, params);
    res.quality_flags |= coarse.flags;

    NuclearExtract nuclear;
    try {
        nuclear = nuclear_extract(coarse.whitened, coarse.mask, seed, params);
        res.quality_flags |= nuclear.flags;
    } catch (const std::exception&) {
        // fully degenerate crop: keep the unrotated frame
        nuclear.nucleus = coarse.mask;
        nuclear.angle_deg = 0.0;
        nuclear.direction = HeadDirection::Right;
        res.quality_flags |= kFlagTinyNucleus | kFlagAmbiguousOrientation;
    }

    AlignedCrops aligned = align_right(coarse.whitened, coarse.mask, nuclear.nucleus,
                                       nuclear.angle_deg, nuclear.direction);
    res.aligned_image = aligned.image;
    res.rotation_applied = aligned.rotation_applied;
    res.nuclear_mask = aligned.nucleus;

    BinaryMask fused =
        fuse_acrosome(aligned.coarse, aligned.nucleus, params, &res.quality_flags);
    if (fused.empty()) {
        // last-resort fallback keeps the hierarchy invariant (nonempty base)
        res.quality_flags |= kFlagEmptyAcrosome;
        fused = aligned.coarse.empty() ? BinaryMask(img.height, img.width, 1)
                                       : largest_component(aligned.coarse);
    }
    res.hierarchy = build_hierarchy(fused, aligned.coarse, h, &res.quality_flags);
    if (res.hierarchy.innermost().empty()) {
        // bound may have rotated away from a degenerate fused mask
        res.quality_flags |= kFlagClippedHierarchy;
        BinaryMask full(img.height, img.width, 1);
        res.hierarchy = build_hierarchy(aligned.coarse.empty() ? full : aligned.coarse,
                                        aligned.coarse.empty() ? full : aligned.coarse,
                                        h, &res.quality_flags);
    }
    return res;
}

}  // namespace smorph
