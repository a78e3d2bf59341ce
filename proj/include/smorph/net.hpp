#ifndef SMORPH_NET_HPP
#define SMORPH_NET_HPP

#include <array>
#include <string>
#include <vector>

#include "smorph/losses.hpp"
#include "smorph/tensor.hpp"

namespace smorph {

struct NetConfig {
    int input_channels = 1;
    int input_size = 64;  // square input, divisible by 2^stages
    std::vector<int> stage_channels = {16, 32, 64};
    int decoder_channels = 32;
    int num_classes = 4;

    int stages() const { return int(stage_channels.size()); }
    int lowest_res() const { return input_size >> stages(); }
    void validate() const;
};

struct ParamTensor {
    std::string name;
    std::vector<int> shape;
    std::vector<float> w;

    size_t size() const { return w.size(); }
};

// Caches one sample's encoder activations for the backward pass. Max-pool
// argmax indices are stored per pooled pixel.
struct EncoderWorkspace {
    Tensor input;
    std::vector<Tensor> stage_a, stage_b, pooled;  // per stage
    std::vector<std::vector<uint8_t>> pool_argmax;
};

struct DecoderWorkspace {
    Tensor d0;
    std::vector<Tensor> up, proj, fused;  // index 0 = deepest fusion
    Tensor seg_logit;
    ProbMap prob;
};

struct HeadWorkspace {
    std::vector<float> pooled;
};

// Encoder feature pyramid: per-stage (pre-pool) maps plus the pooled
// lowest-resolution features the heads consume.
struct EncoderOutput {
    const std::vector<Tensor>* pyramid = nullptr;
    const Tensor* lowest_res = nullptr;
};

// Three-stage convolutional encoder with a bilinear-upsampling additive-fusion
// decoder and linear heads. Inputs in [0,1] are mapped to [-1,1] before the
// first convolution. Parameters live in a flat named registry so the
// optimizer, EMA and checkpoints can treat the network uniformly.
class Network {
public:
    Network() = default;
    Network(const NetConfig& cfg, uint64_t seed);

    const NetConfig& config() const { return cfg_; }
    std::vector<ParamTensor>& params() { return params_; }
    const std::vector<ParamTensor>& params() const { return params_; }
    size_t param_count() const { return total_params_; }
    size_t param_offset(size_t index) const { return offsets_[index]; }

    // forward passes are const and thread-safe given distinct workspaces
    EncoderOutput encoder_forward(const Tensor& input, EncoderWorkspace& ws) const;
    ProbMap decoder_forward(const EncoderWorkspace& enc, DecoderWorkspace& ws) const;
    ProbMap forward_seg(const Tensor& input, EncoderWorkspace& enc,
                        DecoderWorkspace& dec) const;
    std::array<float, 4> forward_rot(const Tensor& input, EncoderWorkspace& enc,
                                     HeadWorkspace& head) const;
    std::vector<float> forward_cls(const Tensor& input, EncoderWorkspace& enc,
                                   HeadWorkspace& head) const;

    // backward passes accumulate parameter gradients into a flat buffer of
    // size param_count(), laid out in registry order
    void backward_seg(const FloatPlane& grad_prob, const EncoderWorkspace& enc,
                      const DecoderWorkspace& dec, std::vector<float>& grad) const;
    void backward_rot(const std::array<float, 4>& grad_logits,
                      const EncoderWorkspace& enc, const HeadWorkspace& head,
                      std::vector<float>& grad) const;
    void backward_cls(const std::vector<float>& grad_logits,
                      const EncoderWorkspace& enc, const HeadWorkspace& head,
                      std::vector<float>& grad) const;

    // throws NumericError naming the offending tensor on NaN/Inf gradients
    void check_gradients(const std::vector<float>& grad) const;

    // copies encoder (and optionally head) parameters from another network
    // with identical encoder geometry
    void adopt_encoder(const Network& other);

private:
    friend struct NetBuilder;

    NetConfig cfg_;
    std::vector<ParamTensor> params_;
    std::vector<size_t> offsets_;
    size_t total_params_ = 0;

    // registry indices
    struct StageIdx {
        int w1, b1, w2, b2;
    };
    std::vector<StageIdx> enc_idx_;
    int dec_bottom_w_ = -1, dec_bottom_b_ = -1;
    std::vector<int> dec_proj_w_, dec_proj_b_;  // per stage, deepest first
    int dec_out_w_ = -1, dec_out_b_ = -1;
    int rot_w_ = -1, rot_b_ = -1;
    int cls_w_ = -1, cls_b_ = -1;

    void rebuild_offsets();
    std::vector<float> head_pooled(const Tensor& lowest) const;
    void backward_head_(const float* grad_logits, int n_out, int w_idx, int b_idx,
                        const EncoderWorkspace& enc, const HeadWorkspace& head,
                        std::vector<float>& grad) const;
};

// elementwise EMA: teacher <- decay * teacher + (1 - decay) * student.
// Arithmetic runs in double and rounds once per element, so an offline replay
// of the recurrence reproduces the stored values exactly.
void ema_update(Network& teacher, const Network& student, double decay);

}  // namespace smorph

#endif
