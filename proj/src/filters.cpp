#include "smorph/filters.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace smorph {

ImageCrop nlm_denoise(const ImageCrop& img, int patch, int search, float strength) {
    if (patch <= 0 || patch % 2 == 0 || search <= 0 || search % 2 == 0)
        throw std::invalid_argument("nlm_denoise: patch and search must be odd");
    if (strength <= 0.0f) throw std::invalid_argument("nlm_denoise: strength must be > 0");

    const int H = img.height, W = img.width, C = img.channels;
    const int pr = patch / 2, sr = search / 2;
    ImageCrop gray = to_gray(img);
    ImageCrop out(H, W, C);
    const double inv_h2 = 1.0 / (double(strength) * double(strength));
    const double patch_norm = 1.0 / double(patch * patch);

    auto gat = [&](int y, int x) {
        y = std::clamp(y, 0, H - 1);
        x = std::clamp(x, 0, W - 1);
        return double(gray.at(y, x));
    };

    std::vector<double> acc(C);
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            double wsum = 0.0;
            std::fill(acc.begin(), acc.end(), 0.0);
            for (int dy = -sr; dy <= sr; ++dy) {
                for (int dx = -sr; dx <= sr; ++dx) {
                    int cy = y + dy, cx = x + dx;
                    if (cy < 0 || cy >= H || cx < 0 || cx >= W) continue;
                    double d2 = 0.0;
                    for (int py = -pr; py <= pr; ++py)
                        for (int px = -pr; px <= pr; ++px) {
                            double diff = gat(y + py, x + px) - gat(cy + py, cx + px);
                            d2 += diff * diff;
                        }
                    d2 *= patch_norm;
                    double w = std::exp(-d2 * inv_h2);
                    wsum += w;
                    for (int c = 0; c < C; ++c) acc[c] += w * img.at(cy, cx, c);
                }
            }
            for (int c = 0; c < C; ++c)
                out.at(y, x, c) = float(std::clamp(acc[c] / wsum, 0.0, 1.0));
        }
    }
    return out;
}

OtsuResult otsu_threshold(const ImageCrop& gray) {
    if (gray.channels != 1)
        throw std::invalid_argument("otsu_threshold: single-channel input required");
    constexpr int kBins = 256;
    std::vector<double> hist(kBins, 0.0);
    for (float v : gray.data) {
        int bin = std::min(kBins - 1, int(std::clamp(v, 0.0f, 1.0f) * kBins));
        hist[bin] += 1.0;
    }
    int occupied = 0;
    for (double h : hist)
        if (h > 0) ++occupied;
    if (occupied <= 1) {
        double mean = std::accumulate(gray.data.begin(), gray.data.end(), 0.0) /
                      double(gray.data.size());
        return {float(mean), true};
    }

    const double total = double(gray.data.size());
    double mu_total = 0.0;
    for (int i = 0; i < kBins; ++i) mu_total += i * hist[i];

    double best = -1.0;
    std::vector<int> ties;
    double w0 = 0.0, sum0 = 0.0;
    for (int k = 0; k < kBins - 1; ++k) {
        w0 += hist[k];
        sum0 += k * hist[k];
        double w1 = total - w0;
        if (w0 <= 0.0 || w1 <= 0.0) continue;
        double mu0 = sum0 / w0;
        double mu1 = (mu_total - sum0) / w1;
        double bcv = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if (bcv > best + 1e-9 * std::max(best, 1.0)) {
            best = bcv;
            ties.assign(1, k);
        } else if (std::abs(bcv - best) <= 1e-9 * std::max(best, 1.0)) {
            ties.push_back(k);
        }
    }
    long sum_k = std::accumulate(ties.begin(), ties.end(), 0L);
    int k_star = int(std::lround(double(sum_k) / double(ties.size())));
    return {float(k_star + 1) / float(kBins), false};
}

KMeansResult kmeans_intensity(const ImageCrop& gray, int k, uint64_t seed,
                              const BinaryMask* region) {
    (void)seed;  // quantile init keeps the result seed-independent
    if (gray.channels != 1)
        throw std::invalid_argument("kmeans_intensity: single-channel input required");
    if (k < 2) throw std::invalid_argument("kmeans_intensity: k must be >= 2");
    if (region && (region->height != gray.height || region->width != gray.width))
        throw std::invalid_argument("kmeans_intensity: region shape mismatch");

    const int n_pix = gray.height * gray.width;
    std::vector<int> member_idx;
    member_idx.reserve(n_pix);
    for (int i = 0; i < n_pix; ++i)
        if (!region || region->bits[i]) member_idx.push_back(i);
    if (member_idx.empty()) throw std::invalid_argument("kmeans_intensity: empty region");

    std::vector<float> values(member_idx.size());
    for (size_t i = 0; i < member_idx.size(); ++i) values[i] = gray.data[member_idx[i]];

    std::vector<float> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    std::vector<float> uniq;
    uniq.push_back(sorted.front());
    for (float v : sorted)
        if (v != uniq.back()) uniq.push_back(v);

    KMeansResult res;
    res.k_effective = k;
    if (int(uniq.size()) < k) {
        res.k_effective = int(uniq.size());
        res.reduced = true;
    }
    const int ke = res.k_effective;

    // start centroids at distinct-value quantiles: deterministic and never
    // collapses two clusters onto the same value
    std::vector<double> centroids(ke);
    for (int i = 0; i < ke; ++i) {
        double q = double(2 * i + 1) / double(2 * ke);
        size_t idx = size_t(std::lround(q * double(uniq.size() - 1)));
        centroids[i] = uniq[idx];
    }

    std::vector<int> assign(values.size(), 0);
    for (int iter = 0; iter < 100; ++iter) {
        for (size_t i = 0; i < values.size(); ++i) {
            double bestd = std::numeric_limits<double>::max();
            int bestc = 0;
            for (int c = 0; c < int(centroids.size()); ++c) {
                double d = std::abs(double(values[i]) - centroids[c]);
                if (d < bestd) {
                    bestd = d;
                    bestc = c;
                }
            }
            assign[i] = bestc;
        }
        std::vector<double> sum(centroids.size(), 0.0);
        std::vector<size_t> cnt(centroids.size(), 0);
        for (size_t i = 0; i < values.size(); ++i) {
            sum[assign[i]] += values[i];
            ++cnt[assign[i]];
        }
        double max_delta = 0.0;
        for (size_t c = 0; c < centroids.size(); ++c) {
            if (cnt[c] == 0) continue;  // keep empty clusters where they are
            double nc = sum[c] / double(cnt[c]);
            max_delta = std::max(max_delta, std::abs(nc - centroids[c]));
            centroids[c] = nc;
        }
        if (max_delta < 1e-6) break;
    }

    // order centroids ascending and remap labels accordingly
    std::vector<int> order(centroids.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return centroids[a] < centroids[b]; });
    std::vector<int> rank(centroids.size());
    for (size_t r = 0; r < order.size(); ++r) rank[order[r]] = int(r);

    res.centroids.resize(centroids.size());
    for (size_t r = 0; r < order.size(); ++r) res.centroids[r] = float(centroids[order[r]]);
    res.labels.assign(n_pix, -1);
    for (size_t i = 0; i < member_idx.size(); ++i)
        res.labels[member_idx[i]] = rank[assign[i]];
    return res;
}

BinaryMask kmeans_label_mask(const KMeansResult& res, int label, int height, int width) {
    BinaryMask mask(height, width);
    for (int i = 0; i < height * width; ++i)
        if (res.labels[i] == label) mask.bits[i] = 1;
    return mask;
}

}  // namespace smorph
