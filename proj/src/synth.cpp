#include "smorph/synth.hpp"

#include <algorithm>
#include <cmath>

namespace smorph {

namespace {

struct LocalFrame {
    double cx, cy, cs, sn;

    // screen -> head-local coordinates (+u is the facing direction)
    void to_local(double x, double y, double& u, double& v) const {
        double dx = x - cx, dy = y - cy;
        // inverse of the visual rotation by pose_deg
        u = cs * dx - sn * dy;
        v = sn * dx + cs * dy;
    }
};

}  // namespace

std::pair<ImageCrop, CropTruth> generate_crop(const SyntheticSpec& spec) {
    const int H = spec.height, W = spec.width, C = spec.channels;
    if (H < 8 || W < 8) throw DataError("generate_crop: frame too small");
    const double cx = (W - 1) / 2.0, cy = (H - 1) / 2.0;
    const double a = spec.head.semi_a, b = spec.head.semi_b;
    if (a <= 0 || b <= 0 || a < b) throw DataError("generate_crop: bad head axes");
    double max_reach = a * (1.0 + std::abs(spec.head.bump_amp));
    if (max_reach > std::min(cx, cy) - 1.0)
        throw DataError("generate_crop: head exceeds frame");

    const double rad = spec.pose_deg * M_PI / 180.0;
    LocalFrame frame{cx, cy, std::cos(rad), std::sin(rad)};

    CropTruth truth;
    truth.head = BinaryMask(H, W);
    truth.midpiece = BinaryMask(H, W);
    truth.tail = BinaryMask(H, W);
    truth.class_id = spec.class_id;
    truth.pose_deg = spec.pose_deg;

    BinaryMask acro(H, W);

    auto head_halfwidth = [&](double xi) {
        double base = b * std::sqrt(std::max(0.0, 1.0 - xi * xi));
        double taper_f = 1.0 - spec.head.taper * (1.0 - xi) / 2.0;
        double bump_f = 1.0 + spec.head.bump_amp *
                                  std::sin(M_PI * spec.head.bump_cycles * (xi + 1.0) +
                                           spec.head.bump_phase);
        return base * std::max(0.1, taper_f * bump_f);
    };

    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            double u, v;
            frame.to_local(x, y, u, v);
            double xi = u / a;
            if (xi >= -1.0 && xi <= 1.0 && std::abs(v) <= head_halfwidth(xi)) {
                truth.head.set(y, x, 1);
                if (xi >= 1.0 - 2.0 * spec.head.acro_fraction) acro.set(y, x, 1);
            }
        }

    if (spec.with_midpiece) {
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                if (truth.head.at(y, x)) continue;
                double u, v;
                frame.to_local(x, y, u, v);
                if (u >= -a - spec.mid.length && u <= -a * 0.9 &&
                    std::abs(v) <= spec.mid.width / 2.0)
                    truth.midpiece.set(y, x, 1);
            }
    }

    if (spec.with_tail) {
        // march along the sinusoid and mark pixels within the half-width
        const double u0 = -a - (spec.with_midpiece ? spec.mid.length : 0.0);
        const double r = std::max(0.5, spec.tail.width / 2.0);
        for (double t = 0.0; t <= spec.tail.length; t += 0.2) {
            double ut = u0 - t;
            double vt = spec.tail.amplitude * std::sin(2.0 * M_PI * t / spec.tail.period);
            // local -> screen
            double sx = cx + frame.cs * ut + frame.sn * vt;
            double sy = cy - frame.sn * ut + frame.cs * vt;
            int x0 = int(std::floor(sx - r)), x1 = int(std::ceil(sx + r));
            int y0 = int(std::floor(sy - r)), y1 = int(std::ceil(sy + r));
            for (int y = std::max(0, y0); y <= std::min(H - 1, y1); ++y)
                for (int x = std::max(0, x0); x <= std::min(W - 1, x1); ++x) {
                    if (truth.head.at(y, x) || truth.midpiece.at(y, x)) continue;
                    double d2 = (x - sx) * (x - sx) + (y - sy) * (y - sy);
                    if (d2 <= r * r) truth.tail.set(y, x, 1);
                }
        }
    }

    ImageCrop img(H, W, C);
    Rng rng(spec.seed);
    // RGB presets use gentle channel tints so gray conversion stays close
    const float tint[3] = {1.0f, 0.96f, 1.02f};
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            float val;
            if (truth.head.at(y, x))
                val = spec.head.intensity + (acro.at(y, x) ? spec.head.acro_delta : 0.0f);
            else if (truth.midpiece.at(y, x))
                val = spec.mid.intensity;
            else if (truth.tail.at(y, x))
                val = spec.tail.intensity;
            else
                val = spec.bg.base +
                      spec.bg.texture_amp *
                          float(std::sin(2.0 * M_PI * (spec.bg.fx * x + spec.bg.fy * y) +
                                         spec.bg.phase));
            float noise = spec.noise_sigma > 0.0f
                              ? float(rng.normal(0.0, spec.noise_sigma))
                              : 0.0f;
            for (int c = 0; c < C; ++c) {
                float v = (C == 3 ? val * tint[c] : val) + noise;
                img.at(y, x, c) = std::clamp(v, 0.0f, 1.0f);
            }
        }

    return {std::move(img), std::move(truth)};
}

SyntheticSpec random_spec(int class_id, int height, int width, int channels,
                          float noise_sigma, Rng& rng) {
    if (class_id < 0 || class_id > 4)
        throw std::invalid_argument("random_spec: class_id must be in 0..4");
    SyntheticSpec s;
    s.class_id = class_id;
    s.height = height;
    s.width = width;
    s.channels = channels;
    s.noise_sigma = noise_sigma;
    s.seed = rng.next_u64();

    const double sc = std::min(height, width) / 35.0;
    double ratio = 1.6, semi_b = 5.0;
    switch (class_id) {
        case 0:  // normal
            semi_b = rng.uniform(4.4, 5.2) * sc;
            ratio = rng.uniform(1.55, 1.85);
            s.head.taper = rng.uniform(0.25, 0.40);
            break;
        case 1:  // tapered
            semi_b = rng.uniform(3.0, 3.7) * sc;
            ratio = rng.uniform(2.3, 2.9);
            s.head.taper = rng.uniform(0.25, 0.45);
            break;
        case 2:  // pyriform
            semi_b = rng.uniform(4.2, 5.0) * sc;
            ratio = rng.uniform(1.7, 2.0);
            s.head.taper = rng.uniform(0.60, 0.80);
            break;
        case 3:  // amorphous
            semi_b = rng.uniform(3.8, 5.0) * sc;
            ratio = rng.uniform(1.5, 2.1);
            s.head.taper = rng.uniform(0.20, 0.50);
            s.head.bump_amp = rng.uniform(0.15, 0.28);
            s.head.bump_cycles = 2 + int(rng.uniform_index(3));
            s.head.bump_phase = rng.uniform(0.0, 2.0 * M_PI);
            break;
        default:  // small
            semi_b = rng.uniform(2.6, 3.2) * sc;
            ratio = rng.uniform(1.55, 1.85);
            s.head.taper = rng.uniform(0.25, 0.40);
            break;
    }
    s.head.semi_b = semi_b;
    s.head.semi_a = semi_b * ratio;
    // the acrosome is a thin anterior band: big lighter caps would leave the
    // nuclear blob too round for a stable axis fit
    s.head.acro_fraction = rng.uniform(0.18, 0.30);
    s.head.intensity = float(rng.uniform(0.22, 0.30));
    s.head.acro_delta = 0.10f;

    s.mid.length = rng.uniform(3.0, 5.0) * sc;
    s.mid.width = rng.uniform(2.0, 3.0) * sc;
    s.mid.intensity = float(rng.uniform(0.42, 0.50));

    s.tail.length = rng.uniform(8.0, 13.0) * sc;
    s.tail.amplitude = rng.uniform(1.0, 2.2) * sc;
    s.tail.period = rng.uniform(6.0, 10.0) * sc;
    s.tail.width = 1.5 * sc;
    s.tail.intensity = float(rng.uniform(0.52, 0.60));

    s.bg.base = float(rng.uniform(0.86, 0.94));
    s.bg.texture_amp = float(rng.uniform(0.0, 0.03));
    s.bg.fx = rng.uniform(0.02, 0.06);
    s.bg.fy = rng.uniform(0.02, 0.06);
    s.bg.phase = rng.uniform(0.0, 2.0 * M_PI);

    s.pose_deg = rng.uniform(-180.0, 180.0);
    return s;
}

const char* synth_class_name(int class_id) {
    switch (class_id) {
        case 0: return "normal";
        case 1: return "tapered";
        case 2: return "pyriform";
        case 3: return "amorphous";
        case 4: return "small";
        default: return "unknown";
    }
}

}  // namespace smorph
