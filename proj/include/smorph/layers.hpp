#ifndef SMORPH_LAYERS_HPP
#define SMORPH_LAYERS_HPP

#include <vector>

#include "smorph/tensor.hpp"

namespace smorph {

// Stride-1 convolution with pad = k/2 ("same" shape). W is [cout, cin, k, k].
void conv2d_forward(const std::vector<float>& W, const std::vector<float>& b,
                    const Tensor& x, Tensor& y, int cout, int k);

// Accumulates parameter gradients into gW/gb and returns the input gradient.
void conv2d_backward(const std::vector<float>& W, const Tensor& x, const Tensor& gy,
                     Tensor& gx, float* gW, float* gb, int cout, int k);

void relu_inplace(Tensor& t);
void relu_backward_inplace(const Tensor& out, Tensor& g);

// 2x2 max pooling, stride 2; spatial dims must be even. argmax holds the
// winning corner index (0..3) per pooled pixel.
void maxpool2_forward(const Tensor& x, Tensor& y, std::vector<uint8_t>& argmax);
void maxpool2_backward(const Tensor& gy, const std::vector<uint8_t>& argmax,
                       Tensor& gx, int in_h, int in_w);

// 2x bilinear upsampling; source coordinate of output i is (i+0.5)/2 - 0.5
// with border clamping, so constant maps stay constant.
void upsample2_forward(const Tensor& x, Tensor& y);
void upsample2_backward(const Tensor& gy, Tensor& gx, int in_h, int in_w);

void add_inplace(Tensor& a, const Tensor& b);

}  // namespace smorph

#endif
