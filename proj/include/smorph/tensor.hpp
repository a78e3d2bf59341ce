#ifndef SMORPH_TENSOR_HPP
#define SMORPH_TENSOR_HPP

#include <vector>

#include "smorph/image.hpp"

namespace smorph {

// Planar CHW float tensor.
struct Tensor {
    int c = 0, h = 0, w = 0;
    std::vector<float> v;

    Tensor() = default;
    Tensor(int c_, int h_, int w_, float fill = 0.0f)
        : c(c_), h(h_), w(w_), v(size_t(c_) * size_t(h_) * size_t(w_), fill) {}

    float at(int ch, int y, int x) const {
        return v[(size_t(ch) * h + y) * w + x];
    }
    float& at(int ch, int y, int x) { return v[(size_t(ch) * h + y) * w + x]; }
    const float* plane(int ch) const { return v.data() + size_t(ch) * h * w; }
    float* plane(int ch) { return v.data() + size_t(ch) * h * w; }
    size_t size() const { return v.size(); }
    bool same_shape(const Tensor& o) const { return c == o.c && h == o.h && w == o.w; }
};

// HWC image -> CHW tensor
Tensor to_tensor(const ImageCrop& img);
ImageCrop to_image(const Tensor& t);

// exact quarter-turn rotation, counterclockwise on screen
Tensor rot90(const Tensor& t, int quarter_turns);
Tensor vflip(const Tensor& t);

}  // namespace smorph

#endif
