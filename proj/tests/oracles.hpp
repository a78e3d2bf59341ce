// Test-only reference implementations, independent of the library's compute
// paths: double-precision layer forwards, finite differences, brute-force
// loss loops, and a confusion-matrix metric oracle.
#ifndef SMORPH_TESTS_ORACLES_HPP
#define SMORPH_TESTS_ORACLES_HPP

#include <cmath>
#include <functional>
#include <vector>

#include "smorph/image.hpp"
#include "smorph/warp.hpp"

namespace oracle {

using DVec = std::vector<double>;

struct DTensor {
    int c = 0, h = 0, w = 0;
    DVec v;

    DTensor() = default;
    DTensor(int c_, int h_, int w_) : c(c_), h(h_), w(w_), v(size_t(c_) * h_ * w_, 0.0) {}
    double at(int ch, int y, int x) const { return v[(size_t(ch) * h + y) * w + x]; }
    double& at(int ch, int y, int x) { return v[(size_t(ch) * h + y) * w + x]; }
};

// ---- double-precision layer forwards (naive loops) ----

inline DTensor conv2d(const DVec& W, const DVec& b, const DTensor& x, int cout, int k) {
    int pad = k / 2;
    DTensor y(cout, x.h, x.w);
    for (int co = 0; co < cout; ++co)
        for (int yy = 0; yy < x.h; ++yy)
            for (int xx = 0; xx < x.w; ++xx) {
                double acc = b[co];
                for (int ci = 0; ci < x.c; ++ci)
                    for (int ky = 0; ky < k; ++ky)
                        for (int kx = 0; kx < k; ++kx) {
                            int sy = yy + ky - pad, sx = xx + kx - pad;
                            if (sy < 0 || sy >= x.h || sx < 0 || sx >= x.w) continue;
                            acc += W[((size_t(co) * x.c + ci) * k + ky) * k + kx] *
                                   x.at(ci, sy, sx);
                        }
                y.at(co, yy, xx) = acc;
            }
    return y;
}

inline DTensor relu(DTensor t) {
    for (double& v : t.v) v = v > 0.0 ? v : 0.0;
    return t;
}

inline DTensor maxpool2(const DTensor& x) {
    DTensor y(x.c, x.h / 2, x.w / 2);
    for (int c = 0; c < x.c; ++c)
        for (int yy = 0; yy < y.h; ++yy)
            for (int xx = 0; xx < y.w; ++xx) {
                double m = x.at(c, yy * 2, xx * 2);
                m = std::max(m, x.at(c, yy * 2, xx * 2 + 1));
                m = std::max(m, x.at(c, yy * 2 + 1, xx * 2));
                m = std::max(m, x.at(c, yy * 2 + 1, xx * 2 + 1));
                y.at(c, yy, xx) = m;
            }
    return y;
}

inline DTensor upsample2(const DTensor& x) {
    DTensor y(x.c, x.h * 2, x.w * 2);
    auto tap = [](int i, int n, int& lo, int& hi, double& w) {
        double f = (i + 0.5) / 2.0 - 0.5;
        int l = int(std::floor(f));
        w = f - l;
        lo = std::min(std::max(l, 0), n - 1);
        hi = std::min(std::max(l + 1, 0), n - 1);
    };
    for (int c = 0; c < x.c; ++c)
        for (int yy = 0; yy < y.h; ++yy)
            for (int xx = 0; xx < y.w; ++xx) {
                int ylo, yhi, xlo, xhi;
                double wy, wx;
                tap(yy, x.h, ylo, yhi, wy);
                tap(xx, x.w, xlo, xhi, wx);
                y.at(c, yy, xx) = (1 - wy) * ((1 - wx) * x.at(c, ylo, xlo) +
                                              wx * x.at(c, ylo, xhi)) +
                                  wy * ((1 - wx) * x.at(c, yhi, xlo) +
                                        wx * x.at(c, yhi, xhi));
            }
    return y;
}

inline DVec gap(const DTensor& x) {
    DVec out(x.c, 0.0);
    for (int c = 0; c < x.c; ++c) {
        double acc = 0.0;
        for (int y = 0; y < x.h; ++y)
            for (int xx = 0; xx < x.w; ++xx) acc += x.at(c, y, xx);
        out[c] = acc / (double(x.h) * x.w);
    }
    return out;
}

inline DVec linear(const DVec& W, const DVec& b, const DVec& x) {
    DVec y(b.size(), 0.0);
    for (size_t o = 0; o < b.size(); ++o) {
        double acc = b[o];
        for (size_t i = 0; i < x.size(); ++i) acc += W[o * x.size() + i] * x[i];
        y[o] = acc;
    }
    return y;
}

inline DTensor sigmoid(DTensor t) {
    for (double& v : t.v) v = 1.0 / (1.0 + std::exp(-v));
    return t;
}

// ---- finite differences ----

// central difference d f / d x_i over an arbitrary scalar function
inline double central_diff(const std::function<double(double)>& f_of_xi, double xi,
                           double step) {
    return (f_of_xi(xi + step) - f_of_xi(xi - step)) / (2.0 * step);
}

struct RelErr {
    double max_rel = 0.0;
    double worst_analytic = 0.0, worst_numeric = 0.0;

    void update(double analytic, double numeric, double floor_ = 1e-3) {
        double denom = std::max({std::abs(analytic), std::abs(numeric), floor_});
        double rel = std::abs(analytic - numeric) / denom;
        if (rel > max_rel) {
            max_rel = rel;
            worst_analytic = analytic;
            worst_numeric = numeric;
        }
    }
};

// ---- brute-force loss oracles ----

// inverse-warp a map per the record definition (inverse flip, then inverse
// shift/rotation/scale) and return per-pixel values + validity, all double
struct WarpedMap {
    std::vector<double> v;
    std::vector<uint8_t> valid;
};

inline WarpedMap invert_map_reference(const std::vector<float>& map, int H, int W,
                                      const smorph::AugmentationRecord& rec) {
    WarpedMap out;
    out.v.assign(size_t(H) * W, 0.0);
    out.valid.assign(size_t(H) * W, 0);
    const double cx = (W - 1) / 2.0, cy = (H - 1) / 2.0;
    const double rad = rec.rotation_deg * M_PI / 180.0;
    const double cs = std::cos(rad), sn = std::sin(rad);
    // forward chain: scale, rotate (visual CCW), shift, vflip
    auto forward = [&](double x, double y, double& fx, double& fy) {
        double u = (x - cx) * rec.scale, v = (y - cy) * rec.scale;
        double ru = u * cs + v * sn, rv = -u * sn + v * cs;
        fx = cx + ru + rec.shift_dx * W;
        fy = cy + rv + rec.shift_dy * H;
        if (rec.vflip) fy = (H - 1) - fy;
    };
    // inverse chain, for the content-validity rule
    auto backward = [&](double x, double y, double& bx, double& by) {
        if (rec.vflip) y = (H - 1) - y;
        double u = x - cx - rec.shift_dx * W, v = y - cy - rec.shift_dy * H;
        double ru = u * cs - v * sn, rv = u * sn + v * cs;
        bx = cx + ru / rec.scale;
        by = cy + rv / rec.scale;
    };
    auto in_frame = [&](double x, double y) {
        constexpr double eps = 1e-9;  // tolerant border, mirroring the contract
        return x >= -eps && x <= W - 1.0 + eps && y >= -eps && y <= H - 1.0 + eps;
    };
    auto content_ok = [&](int qx, int qy) {
        double bx, by;
        backward(qx, qy, bx, by);
        return in_frame(bx, by);
    };
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            double fx, fy;
            forward(x, y, fx, fy);
            if (!in_frame(fx, fy)) continue;
            {
                int x0 = std::min(std::max(int(std::floor(fx)), 0), W - 1);
                int y0 = std::min(std::max(int(std::floor(fy)), 0), H - 1);
                int x1 = std::min(x0 + 1, W - 1), y1 = std::min(y0 + 1, H - 1);
                if (!content_ok(x0, y0) || !content_ok(x1, y0) ||
                    !content_ok(x0, y1) || !content_ok(x1, y1))
                    continue;
            }
            int x0 = int(std::floor(fx)), y0 = int(std::floor(fy));
            double wx = fx - x0, wy = fy - y0;
            auto atc = [&](int yy, int xx) {
                yy = std::min(std::max(yy, 0), H - 1);
                xx = std::min(std::max(xx, 0), W - 1);
                return double(map[size_t(yy) * W + xx]);
            };
            out.v[size_t(y) * W + x] =
                (1 - wy) * ((1 - wx) * atc(y0, x0) + wx * atc(y0, x0 + 1)) +
                wy * ((1 - wx) * atc(y0 + 1, x0) + wx * atc(y0 + 1, x0 + 1));
            out.valid[size_t(y) * W + x] = 1;
        }
    return out;
}

inline double consistency_reference(const std::vector<float>& ys,
                                    const std::vector<float>& yt, int H, int W,
                                    const smorph::AugmentationRecord& r1,
                                    const smorph::AugmentationRecord& r2) {
    WarpedMap a = invert_map_reference(ys, H, W, r1);
    WarpedMap b = invert_map_reference(yt, H, W, r2);
    double acc = 0.0;
    long n = 0;
    for (size_t i = 0; i < a.v.size(); ++i) {
        if (!a.valid[i] || !b.valid[i]) continue;
        double d = a.v[i] - b.v[i];
        acc += d * d;
        ++n;
    }
    return n == 0 ? 0.0 : acc / double(n);
}

// ---- metric oracle from a confusion matrix ----

struct MetricOracle {
    double accuracy = 0.0, recall = 0.0, precision = 0.0, f1 = 0.0;
};

inline MetricOracle metrics_reference(const std::vector<int>& truth,
                                      const std::vector<int>& pred, int k) {
    std::vector<std::vector<long>> cm(k, std::vector<long>(k, 0));
    for (size_t i = 0; i < truth.size(); ++i) ++cm[truth[i]][pred[i]];
    MetricOracle m;
    long correct = 0;
    for (int c = 0; c < k; ++c) correct += cm[c][c];
    m.accuracy = double(correct) / double(truth.size());
    int present = 0;
    for (int c = 0; c < k; ++c) {
        long tp = cm[c][c], t_total = 0, p_total = 0;
        for (int j = 0; j < k; ++j) {
            t_total += cm[c][j];
            p_total += cm[j][c];
        }
        if (t_total == 0) continue;
        ++present;
        double r = double(tp) / double(t_total);
        double p = p_total > 0 ? double(tp) / double(p_total) : 0.0;
        m.recall += r;
        m.precision += p;
        m.f1 += (p + r) > 0 ? 2.0 * p * r / (p + r) : 0.0;
    }
    m.recall /= present;
    m.precision /= present;
    m.f1 /= present;
    return m;
}

// solid ellipse raster: pixel centers inside the rotated ellipse equation
inline smorph::BinaryMask rasterize_ellipse(int H, int W, double cx, double cy,
                                            double semi_a, double semi_b,
                                            double angle_deg) {
    smorph::BinaryMask m(H, W);
    double rad = angle_deg * M_PI / 180.0;
    double cs = std::cos(rad), sn = std::sin(rad);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            double dx = x - cx, dy = y - cy;
            // screen y points down; visual angle is CCW from +x
            double u = cs * dx - sn * dy;
            double v = sn * dx + cs * dy;
            if ((u * u) / (semi_a * semi_a) + (v * v) / (semi_b * semi_b) <= 1.0)
                m.set(y, x, 1);
        }
    return m;
}

}  // namespace oracle

#endif
