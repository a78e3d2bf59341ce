#include "smorph/layers.hpp"

#include <algorithm>
#include <cmath>

namespace smorph {

void conv2d_forward(const std::vector<float>& W, const std::vector<float>& b,
                    const Tensor& x, Tensor& y, int cout, int k) {
    const int H = x.h, Wd = x.w, cin = x.c, pad = k / 2;
    y = Tensor(cout, H, Wd);
    for (int co = 0; co < cout; ++co) {
        float* dst = y.plane(co);
        std::fill(dst, dst + size_t(H) * Wd, b[co]);
    }
    for (int co = 0; co < cout; ++co) {
        float* yp = y.plane(co);
        for (int ci = 0; ci < cin; ++ci) {
            const float* xp = x.plane(ci);
            const float* wrow = &W[((size_t(co) * cin + ci) * k) * k];
            for (int ky = 0; ky < k; ++ky) {
                int dy = ky - pad;
                int ylo = std::max(0, -dy), yhi = std::min(H, H - dy);
                for (int kx = 0; kx < k; ++kx) {
                    int dx = kx - pad;
                    float w = wrow[ky * k + kx];
                    int xlo = std::max(0, -dx), xhi = std::min(Wd, Wd - dx);
                    for (int yy = ylo; yy < yhi; ++yy) {
                        const float* src = xp + size_t(yy + dy) * Wd + dx;
                        float* out = yp + size_t(yy) * Wd;
                        for (int xx = xlo; xx < xhi; ++xx) out[xx] += w * src[xx];
                    }
                }
            }
        }
    }
}

void conv2d_backward(const std::vector<float>& W, const Tensor& x, const Tensor& gy,
                     Tensor& gx, float* gW, float* gb, int cout, int k) {
    const int H = x.h, Wd = x.w, cin = x.c, pad = k / 2;
    gx = Tensor(cin, H, Wd);
    for (int co = 0; co < cout; ++co) {
        const float* gyp = gy.plane(co);
        double acc = 0.0;
        for (size_t i = 0; i < size_t(H) * Wd; ++i) acc += gyp[i];
        gb[co] += float(acc);
        for (int ci = 0; ci < cin; ++ci) {
            const float* xp = x.plane(ci);
            float* gxp = gx.plane(ci);
            const float* wrow = &W[((size_t(co) * cin + ci) * k) * k];
            float* gwrow = gW + ((size_t(co) * cin + ci) * k) * k;
            for (int ky = 0; ky < k; ++ky) {
                int dy = ky - pad;
                int ylo = std::max(0, -dy), yhi = std::min(H, H - dy);
                for (int kx = 0; kx < k; ++kx) {
                    int dx = kx - pad;
                    float w = wrow[ky * k + kx];
                    int xlo = std::max(0, -dx), xhi = std::min(Wd, Wd - dx);
                    double gw_acc = 0.0;
                    for (int yy = ylo; yy < yhi; ++yy) {
                        const float* src = xp + size_t(yy + dy) * Wd + dx;
                        float* gsrc = gxp + size_t(yy + dy) * Wd + dx;
                        const float* g = gyp + size_t(yy) * Wd;
                        for (int xx = xlo; xx < xhi; ++xx) {
                            gw_acc += double(src[xx]) * double(g[xx]);
                            gsrc[xx] += w * g[xx];
                        }
                    }
                    gwrow[ky * k + kx] += float(gw_acc);
                }
            }
        }
    }
}

void relu_inplace(Tensor& t) {
    for (float& v : t.v) v = v > 0.0f ? v : 0.0f;
}

// gradient masked by the post-activation output sign
void relu_backward_inplace(const Tensor& out, Tensor& g) {
    for (size_t i = 0; i < g.v.size(); ++i)
        if (!(out.v[i] > 0.0f)) g.v[i] = 0.0f;
}

void maxpool2_forward(const Tensor& x, Tensor& y, std::vector<uint8_t>& argmax) {
    if (x.h % 2 != 0 || x.w % 2 != 0)
        throw std::invalid_argument("maxpool2: spatial dims must be even");
    const int H = x.h / 2, W = x.w / 2;
    y = Tensor(x.c, H, W);
    argmax.assign(size_t(x.c) * H * W, 0);
    for (int c = 0; c < x.c; ++c) {
        const float* xp = x.plane(c);
        float* yp = y.plane(c);
        uint8_t* am = argmax.data() + size_t(c) * H * W;
        for (int yy = 0; yy < H; ++yy)
            for (int xx = 0; xx < W; ++xx) {
                int base = (yy * 2) * x.w + xx * 2;
                float best = xp[base];
                int bi = 0;
                const int offs[4] = {0, 1, x.w, x.w + 1};
                for (int i = 1; i < 4; ++i)
                    if (xp[base + offs[i]] > best) {
                        best = xp[base + offs[i]];
                        bi = i;
                    }
                yp[yy * W + xx] = best;
                am[yy * W + xx] = uint8_t(bi);
            }
    }
}

void maxpool2_backward(const Tensor& gy, const std::vector<uint8_t>& argmax,
                       Tensor& gx, int in_h, int in_w) {
    gx = Tensor(gy.c, in_h, in_w);
    for (int c = 0; c < gy.c; ++c) {
        const float* gyp = gy.plane(c);
        float* gxp = gx.plane(c);
        const uint8_t* am = argmax.data() + size_t(c) * gy.h * gy.w;
        const int offs[4] = {0, 1, in_w, in_w + 1};
        for (int yy = 0; yy < gy.h; ++yy)
            for (int xx = 0; xx < gy.w; ++xx) {
                int base = (yy * 2) * in_w + xx * 2;
                gxp[base + offs[am[yy * gy.w + xx]]] += gyp[yy * gy.w + xx];
            }
    }
}

struct Upsample2Taps {
    int lo, hi;
    float wlo, whi;
};

std::vector<Upsample2Taps> upsample2_taps(int n_out, int n_in) {
    std::vector<Upsample2Taps> taps(n_out);
    for (int i = 0; i < n_out; ++i) {
        double f = (i + 0.5) / 2.0 - 0.5;
        int lo = int(std::floor(f));
        double w = f - lo;
        taps[i].lo = std::clamp(lo, 0, n_in - 1);
        taps[i].hi = std::clamp(lo + 1, 0, n_in - 1);
        taps[i].wlo = float(1.0 - w);
        taps[i].whi = float(w);
    }
    return taps;
}

void upsample2_forward(const Tensor& x, Tensor& y) {
    const int H = x.h * 2, W = x.w * 2;
    y = Tensor(x.c, H, W);
    auto ty = upsample2_taps(H, x.h), tx = upsample2_taps(W, x.w);
    for (int c = 0; c < x.c; ++c) {
        const float* xp = x.plane(c);
        float* yp = y.plane(c);
        for (int yy = 0; yy < H; ++yy) {
            const auto& a = ty[yy];
            for (int xx = 0; xx < W; ++xx) {
                const auto& b = tx[xx];
                yp[yy * W + xx] = a.wlo * (b.wlo * xp[a.lo * x.w + b.lo] +
                                           b.whi * xp[a.lo * x.w + b.hi]) +
                                  a.whi * (b.wlo * xp[a.hi * x.w + b.lo] +
                                           b.whi * xp[a.hi * x.w + b.hi]);
            }
        }
    }
}

void upsample2_backward(const Tensor& gy, Tensor& gx, int in_h, int in_w) {
    gx = Tensor(gy.c, in_h, in_w);
    auto ty = upsample2_taps(gy.h, in_h), tx = upsample2_taps(gy.w, in_w);
    for (int c = 0; c < gy.c; ++c) {
        const float* gyp = gy.plane(c);
        float* gxp = gx.plane(c);
        for (int yy = 0; yy < gy.h; ++yy) {
            const auto& a = ty[yy];
            for (int xx = 0; xx < gy.w; ++xx) {
                const auto& b = tx[xx];
                float g = gyp[yy * gy.w + xx];
                gxp[a.lo * in_w + b.lo] += a.wlo * b.wlo * g;
                gxp[a.lo * in_w + b.hi] += a.wlo * b.whi * g;
                gxp[a.hi * in_w + b.lo] += a.whi * b.wlo * g;
                gxp[a.hi * in_w + b.hi] += a.whi * b.whi * g;
            }
        }
    }
}

void add_inplace(Tensor& a, const Tensor& b) {
    for (size_t i = 0; i < a.v.size(); ++i) a.v[i] += b.v[i];
}

}  // namespace smorph
