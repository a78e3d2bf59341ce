#include "smorph/morphology.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace smorph {

namespace {

BinaryMask dilate_once(const BinaryMask& m) {
    BinaryMask out(m.height, m.width);
    for (int y = 0; y < m.height; ++y) {
        for (int x = 0; x < m.width; ++x) {
            if (!m.at(y, x)) continue;
            for (int dy = -1; dy <= 1; ++dy) {
                int yy = y + dy;
                if (yy < 0 || yy >= m.height) continue;
                for (int dx = -1; dx <= 1; ++dx) {
                    int xx = x + dx;
                    if (xx < 0 || xx >= m.width) continue;
                    out.set(yy, xx, 1);
                }
            }
        }
    }
    return out;
}

BinaryMask erode_once(const BinaryMask& m) {
    BinaryMask out(m.height, m.width);
    for (int y = 0; y < m.height; ++y) {
        for (int x = 0; x < m.width; ++x) {
            bool keep = true;
            for (int dy = -1; dy <= 1 && keep; ++dy) {
                int yy = y + dy;
                for (int dx = -1; dx <= 1; ++dx) {
                    int xx = x + dx;
                    // out-of-frame counts as foreground so that closing
                    // (dilate then erode) always contains the original
                    if (yy < 0 || yy >= m.height || xx < 0 || xx >= m.width) continue;
                    if (!m.at(yy, xx)) {
                        keep = false;
                        break;
                    }
                }
            }
            if (keep) out.set(y, x, 1);
        }
    }
    return out;
}

}  // namespace

BinaryMask dilate(const BinaryMask& mask, int n) {
    if (n < 0) throw std::invalid_argument("dilate: n must be >= 0");
    BinaryMask m = mask;
    for (int i = 0; i < n; ++i) m = dilate_once(m);
    return m;
}

BinaryMask erode(const BinaryMask& mask, int n) {
    if (n < 0) throw std::invalid_argument("erode: n must be >= 0");
    BinaryMask m = mask;
    for (int i = 0; i < n; ++i) m = erode_once(m);
    return m;
}

std::vector<BinaryMask> connected_components(const BinaryMask& mask) {
    std::vector<BinaryMask> comps;
    std::vector<uint8_t> seen(mask.bits.size(), 0);
    std::deque<int> queue;
    for (int start = 0; start < int(mask.bits.size()); ++start) {
        if (!mask.bits[start] || seen[start]) continue;
        BinaryMask comp(mask.height, mask.width);
        queue.clear();
        queue.push_back(start);
        seen[start] = 1;
        while (!queue.empty()) {
            int idx = queue.front();
            queue.pop_front();
            comp.bits[idx] = 1;
            int y = idx / mask.width, x = idx % mask.width;
            for (int dy = -1; dy <= 1; ++dy) {
                int yy = y + dy;
                if (yy < 0 || yy >= mask.height) continue;
                for (int dx = -1; dx <= 1; ++dx) {
                    int xx = x + dx;
                    if (xx < 0 || xx >= mask.width) continue;
                    int nidx = yy * mask.width + xx;
                    if (mask.bits[nidx] && !seen[nidx]) {
                        seen[nidx] = 1;
                        queue.push_back(nidx);
                    }
                }
            }
        }
        comps.push_back(std::move(comp));
    }
    std::stable_sort(comps.begin(), comps.end(),
                     [](const BinaryMask& a, const BinaryMask& b) {
                         return a.count() > b.count();
                     });
    return comps;
}

BinaryMask largest_component(const BinaryMask& mask) {
    auto comps = connected_components(mask);
    if (comps.empty()) return BinaryMask(mask.height, mask.width);
    return comps.front();
}

int erosions_until_empty(const BinaryMask& mask) {
    BinaryMask m = mask;
    int steps = 0;
    while (!m.empty()) {
        m = erode_once(m);
        ++steps;
        if (steps > std::max(m.height, m.width)) break;  // cannot survive longer
    }
    return steps;
}

Centroid mask_centroid(const BinaryMask& mask) {
    double sx = 0, sy = 0, n = 0;
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            if (mask.at(y, x)) {
                sx += x;
                sy += y;
                n += 1;
            }
    if (n == 0) throw std::invalid_argument("mask_centroid: empty mask");
    return {sx / n, sy / n};
}

BBox mask_bbox(const BinaryMask& mask) {
    BBox box{mask.width, mask.height, -1, -1};
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            if (mask.at(y, x)) {
                box.x0 = std::min(box.x0, x);
                box.y0 = std::min(box.y0, y);
                box.x1 = std::max(box.x1, x);
                box.y1 = std::max(box.y1, y);
            }
    return box;
}

EllipseParams fit_ellipse(const BinaryMask& mask) {
    size_t n = mask.count();
    if (n < 5) throw std::invalid_argument("fit_ellipse: mask has fewer than 5 pixels");
    Centroid c = mask_centroid(mask);
    double mu20 = 0, mu02 = 0, mu11 = 0;
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            if (mask.at(y, x)) {
                double dx = x - c.x, dy = y - c.y;
                mu20 += dx * dx;
                mu02 += dy * dy;
                mu11 += dx * dy;
            }
    mu20 /= double(n);
    mu02 /= double(n);
    mu11 /= double(n);

    double tr = mu20 + mu02;
    double det = mu20 * mu02 - mu11 * mu11;
    double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
    double l1 = tr / 2.0 + disc;
    double l2 = tr / 2.0 - disc;
    if (l2 <= 1e-9) throw std::domain_error("fit_ellipse: degenerate (zero-variance) mask");

    // principal eigenvector in (x, y-down) coordinates
    double ex, ey;
    if (std::abs(mu11) > 1e-12) {
        ex = l1 - mu02;
        ey = mu11;
    } else if (mu20 >= mu02) {
        ex = 1;
        ey = 0;
    } else {
        ex = 0;
        ey = 1;
    }
    // visual angle measured CCW from +x (screen y points down)
    double angle = std::atan2(-ey, ex) * 180.0 / M_PI;
    if (angle <= -90.0) angle += 180.0;
    if (angle > 90.0) angle -= 180.0;

    EllipseParams p;
    p.center_x = c.x;
    p.center_y = c.y;
    p.major_axis = 2.0 * std::sqrt(2.0 * l1);
    p.minor_axis = 2.0 * std::sqrt(2.0 * l2);
    p.angle_deg = angle;
    return p;
}

}  // namespace smorph
