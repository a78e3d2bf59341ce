#ifndef SMORPH_MORPHOLOGY_HPP
#define SMORPH_MORPHOLOGY_HPP

#include <vector>

#include "smorph/image.hpp"

namespace smorph {

// 3x3 8-connected structuring element, applied n times.
BinaryMask dilate(const BinaryMask& mask, int n);
BinaryMask erode(const BinaryMask& mask, int n);

// 8-connectivity. Components are returned largest-first; an empty mask yields
// an empty list.
std::vector<BinaryMask> connected_components(const BinaryMask& mask);
BinaryMask largest_component(const BinaryMask& mask);

// Number of erosion steps until the mask becomes empty.
int erosions_until_empty(const BinaryMask& mask);

struct Centroid {
    double x = 0.0;
    double y = 0.0;
};
Centroid mask_centroid(const BinaryMask& mask);  // throws on empty mask

struct BBox {
    int x0 = 0, y0 = 0, x1 = -1, y1 = -1;  // inclusive; empty when x1 < x0
    int width() const { return x1 < x0 ? 0 : x1 - x0 + 1; }
    int height() const { return y1 < y0 ? 0 : y1 - y0 + 1; }
};
BBox mask_bbox(const BinaryMask& mask);

struct EllipseParams {
    double center_x = 0.0;
    double center_y = 0.0;
    double major_axis = 0.0;  // 2*sqrt(2*lambda1)
    double minor_axis = 0.0;  // 2*sqrt(2*lambda2)
    double angle_deg = 0.0;   // major-axis angle in (-90, 90], CCW from +x
};

// Moment-based fit. Throws std::invalid_argument for masks under 5 pixels and
// std::domain_error for zero-variance (degenerate) masks.
EllipseParams fit_ellipse(const BinaryMask& mask);

}  // namespace smorph

#endif
