#include "smorph/net.hpp"

#include "smorph/layers.hpp"

#include <algorithm>
#include <cmath>

namespace smorph {

void NetConfig::validate() const {
    if (input_channels != 1 && input_channels != 3)
        throw UsageError("net: input_channels must be 1 or 3");
    if (stage_channels.empty()) throw UsageError("net: no encoder stages");
    for (int c : stage_channels)
        if (c <= 0) throw UsageError("net: stage channels must be positive");
    if (decoder_channels <= 0) throw UsageError("net: decoder channels must be positive");
    if (num_classes < 2) throw UsageError("net: need at least 2 classes");
    int div = 1 << stages();
    if (input_size <= 0 || input_size % div != 0)
        throw UsageError("net: input_size must be divisible by 2^stages");
}

Network::Network(const NetConfig& cfg, uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(seed);

    auto add_param = [&](const std::string& name, std::vector<int> shape,
                         double fan_in) -> int {
        ParamTensor p;
        p.name = name;
        p.shape = std::move(shape);
        size_t n = 1;
        for (int d : p.shape) n *= size_t(d);
        p.w.resize(n);
        if (fan_in > 0.0) {
            double std = std::sqrt(2.0 / fan_in);
            for (float& v : p.w) v = float(rng.normal(0.0, std));
        }
        params_.push_back(std::move(p));
        return int(params_.size()) - 1;
    };

    int cin = cfg_.input_channels;
    for (int s = 0; s < cfg_.stages(); ++s) {
        int cout = cfg_.stage_channels[s];
        std::string base = "enc" + std::to_string(s + 1);
        StageIdx idx;
        idx.w1 = add_param(base + ".conv1.w", {cout, cin, 3, 3}, double(cin) * 9);
        idx.b1 = add_param(base + ".conv1.b", {cout}, 0.0);
        idx.w2 = add_param(base + ".conv2.w", {cout, cout, 3, 3}, double(cout) * 9);
        idx.b2 = add_param(base + ".conv2.b", {cout}, 0.0);
        enc_idx_.push_back(idx);
        cin = cout;
    }

    const int D = cfg_.decoder_channels;
    const int deepest = cfg_.stage_channels.back();
    dec_bottom_w_ = add_param("dec.bottom.w", {D, deepest, 1, 1}, deepest);
    dec_bottom_b_ = add_param("dec.bottom.b", {D}, 0.0);
    for (int s = cfg_.stages() - 1; s >= 0; --s) {
        int cs = cfg_.stage_channels[s];
        std::string base = "dec.proj" + std::to_string(s + 1);
        dec_proj_w_.push_back(add_param(base + ".w", {D, cs, 1, 1}, cs));
        dec_proj_b_.push_back(add_param(base + ".b", {D}, 0.0));
    }
    dec_out_w_ = add_param("dec.out.w", {1, D, 1, 1}, D);
    dec_out_b_ = add_param("dec.out.b", {1}, 0.0);

    rot_w_ = add_param("head.rot.w", {4, deepest}, deepest);
    rot_b_ = add_param("head.rot.b", {4}, 0.0);
    cls_w_ = add_param("head.cls.w", {cfg_.num_classes, deepest}, deepest);
    cls_b_ = add_param("head.cls.b", {cfg_.num_classes}, 0.0);

    rebuild_offsets();
}

void Network::rebuild_offsets() {
    offsets_.clear();
    size_t off = 0;
    for (const auto& p : params_) {
        offsets_.push_back(off);
        off += p.size();
    }
    total_params_ = off;
}

EncoderOutput Network::encoder_forward(const Tensor& input, EncoderWorkspace& ws) const {
    if (input.c != cfg_.input_channels)
        throw std::invalid_argument("encoder_forward: channel mismatch");
    int div = 1 << cfg_.stages();
    if (input.h % div != 0 || input.w % div != 0)
        throw std::invalid_argument("encoder_forward: dims not divisible by 2^stages");

    const int S = cfg_.stages();
    // raster intensities live in [0,1]; center them so mostly-white crops do
    // not start the features near a constant
    ws.input = input;
    for (float& v : ws.input.v) v = 2.0f * v - 1.0f;
    ws.stage_a.assign(S, Tensor());
    ws.stage_b.assign(S, Tensor());
    ws.pooled.assign(S, Tensor());
    ws.pool_argmax.assign(S, {});

    const Tensor* cur = &ws.input;
    for (int s = 0; s < S; ++s) {
        const auto& idx = enc_idx_[s];
        int cout = cfg_.stage_channels[s];
        conv2d_forward(params_[idx.w1].w, params_[idx.b1].w, *cur, ws.stage_a[s], cout, 3);
        relu_inplace(ws.stage_a[s]);
        conv2d_forward(params_[idx.w2].w, params_[idx.b2].w, ws.stage_a[s],
                       ws.stage_b[s], cout, 3);
        relu_inplace(ws.stage_b[s]);
        maxpool2_forward(ws.stage_b[s], ws.pooled[s], ws.pool_argmax[s]);
        cur = &ws.pooled[s];
    }
    return EncoderOutput{&ws.stage_b, &ws.pooled.back()};
}

ProbMap Network::decoder_forward(const EncoderWorkspace& enc, DecoderWorkspace& ws) const {
    const int S = cfg_.stages();
    const int D = cfg_.decoder_channels;
    conv2d_forward(params_[dec_bottom_w_].w, params_[dec_bottom_b_].w,
                   enc.pooled.back(), ws.d0, D, 1);
    relu_inplace(ws.d0);

    ws.up.assign(S, Tensor());
    ws.proj.assign(S, Tensor());
    ws.fused.assign(S, Tensor());
    const Tensor* cur = &ws.d0;
    for (int i = 0; i < S; ++i) {
        int stage = S - 1 - i;  // deepest skip first
        upsample2_forward(*cur, ws.up[i]);
        conv2d_forward(params_[dec_proj_w_[i]].w, params_[dec_proj_b_[i]].w,
                       enc.stage_b[stage], ws.proj[i], D, 1);
        ws.fused[i] = ws.up[i];
        add_inplace(ws.fused[i], ws.proj[i]);
        relu_inplace(ws.fused[i]);
        cur = &ws.fused[i];
    }
    conv2d_forward(params_[dec_out_w_].w, params_[dec_out_b_].w, *cur, ws.seg_logit, 1, 1);

    ws.prob = ProbMap(ws.seg_logit.h, ws.seg_logit.w);
    for (size_t i = 0; i < ws.seg_logit.v.size(); ++i)
        ws.prob.v[i] = 1.0f / (1.0f + std::exp(-ws.seg_logit.v[i]));
    ws.prob.clamp();
    return ws.prob;
}

ProbMap Network::forward_seg(const Tensor& input, EncoderWorkspace& enc,
                             DecoderWorkspace& dec) const {
    encoder_forward(input, enc);
    return decoder_forward(enc, dec);
}

std::vector<float> Network::head_pooled(const Tensor& lowest) const {
    std::vector<float> pooled(lowest.c);
    const double inv = 1.0 / (double(lowest.h) * double(lowest.w));
    for (int c = 0; c < lowest.c; ++c) {
        const float* p = lowest.plane(c);
        double acc = 0.0;
        for (size_t i = 0; i < size_t(lowest.h) * lowest.w; ++i) acc += p[i];
        pooled[c] = float(acc * inv);
    }
    return pooled;
}

std::array<float, 4> Network::forward_rot(const Tensor& input, EncoderWorkspace& enc,
                                          HeadWorkspace& head) const {
    encoder_forward(input, enc);
    head.pooled = head_pooled(enc.pooled.back());
    const auto& W = params_[rot_w_].w;
    const auto& b = params_[rot_b_].w;
    const int n = int(head.pooled.size());
    std::array<float, 4> logits{};
    for (int o = 0; o < 4; ++o) {
        double acc = b[o];
        for (int i = 0; i < n; ++i) acc += double(W[size_t(o) * n + i]) * head.pooled[i];
        logits[o] = float(acc);
    }
    return logits;
}

std::vector<float> Network::forward_cls(const Tensor& input, EncoderWorkspace& enc,
                                        HeadWorkspace& head) const {
    encoder_forward(input, enc);
    head.pooled = head_pooled(enc.pooled.back());
    const auto& W = params_[cls_w_].w;
    const auto& b = params_[cls_b_].w;
    const int n = int(head.pooled.size());
    std::vector<float> logits(cfg_.num_classes);
    for (int o = 0; o < cfg_.num_classes; ++o) {
        double acc = b[o];
        for (int i = 0; i < n; ++i) acc += double(W[size_t(o) * n + i]) * head.pooled[i];
        logits[o] = float(acc);
    }
    return logits;
}

void Network::backward_seg(const FloatPlane& grad_prob, const EncoderWorkspace& enc,
                           const DecoderWorkspace& dec, std::vector<float>& grad) const {
    if (grad.size() != total_params_)
        throw std::invalid_argument("backward_seg: gradient buffer size mismatch");
    const int S = cfg_.stages();

    // sigmoid backward
    Tensor gz(1, dec.seg_logit.h, dec.seg_logit.w);
    for (size_t i = 0; i < gz.v.size(); ++i) {
        float p = dec.prob.v[i];
        gz.v[i] = grad_prob.v[i] * p * (1.0f - p);
    }

    // output 1x1 conv
    Tensor gfused;
    conv2d_backward(params_[dec_out_w_].w, dec.fused.back(), gz, gfused,
                    grad.data() + offsets_[dec_out_w_],
                    grad.data() + offsets_[dec_out_b_], 1, 1);

    // fusion chain, deepest last
    std::vector<Tensor> gskip(S);  // grads into enc.stage_b[s]
    for (int i = S - 1; i >= 0; --i) {
        int stage = S - 1 - i;
        relu_backward_inplace(dec.fused[i], gfused);
        // additive fusion: same grad to upsample branch and projection branch
        Tensor gproj_in;
        conv2d_backward(params_[dec_proj_w_[i]].w, enc.stage_b[stage], gfused,
                        gproj_in, grad.data() + offsets_[dec_proj_w_[i]],
                        grad.data() + offsets_[dec_proj_b_[i]],
                        cfg_.decoder_channels, 1);
        if (gskip[stage].v.empty()) gskip[stage] = gproj_in;
        else add_inplace(gskip[stage], gproj_in);

        Tensor gprev;
        const Tensor& below = i == 0 ? dec.d0 : dec.fused[i - 1];
        upsample2_backward(gfused, gprev, below.h, below.w);
        gfused = std::move(gprev);
    }

    // bottom 1x1 conv
    relu_backward_inplace(dec.d0, gfused);
    Tensor glowest;
    conv2d_backward(params_[dec_bottom_w_].w, enc.pooled.back(), gfused, glowest,
                    grad.data() + offsets_[dec_bottom_w_],
                    grad.data() + offsets_[dec_bottom_b_], cfg_.decoder_channels, 1);

    // encoder
    Tensor gpool = std::move(glowest);
    for (int s = S - 1; s >= 0; --s) {
        const auto& idx = enc_idx_[s];
        Tensor gb;
        maxpool2_backward(gpool, enc.pool_argmax[s], gb, enc.stage_b[s].h,
                          enc.stage_b[s].w);
        if (!gskip[s].v.empty()) add_inplace(gb, gskip[s]);
        relu_backward_inplace(enc.stage_b[s], gb);
        Tensor ga;
        conv2d_backward(params_[idx.w2].w, enc.stage_a[s], gb, ga,
                        grad.data() + offsets_[idx.w2], grad.data() + offsets_[idx.b2],
                        cfg_.stage_channels[s], 3);
        relu_backward_inplace(enc.stage_a[s], ga);
        const Tensor& below = s == 0 ? enc.input : enc.pooled[s - 1];
        Tensor gx;
        conv2d_backward(params_[idx.w1].w, below, ga, gx,
                        grad.data() + offsets_[idx.w1], grad.data() + offsets_[idx.b1],
                        cfg_.stage_channels[s], 3);
        gpool = std::move(gx);
    }
}

void Network::backward_rot(const std::array<float, 4>& grad_logits,
                           const EncoderWorkspace& enc, const HeadWorkspace& head,
                           std::vector<float>& grad) const {
    backward_head_(grad_logits.data(), 4, rot_w_, rot_b_, enc, head, grad);
}

void Network::backward_cls(const std::vector<float>& grad_logits,
                           const EncoderWorkspace& enc, const HeadWorkspace& head,
                           std::vector<float>& grad) const {
    if (int(grad_logits.size()) != cfg_.num_classes)
        throw std::invalid_argument("backward_cls: logit size mismatch");
    backward_head_(grad_logits.data(), cfg_.num_classes, cls_w_, cls_b_, enc, head, grad);
}

void Network::backward_head_(const float* glogits, int n_out, int w_idx, int b_idx,
                             const EncoderWorkspace& enc, const HeadWorkspace& head,
                             std::vector<float>& grad) const {
    if (grad.size() != total_params_)
        throw std::invalid_argument("backward_head: gradient buffer size mismatch");
    const int n_in = int(head.pooled.size());
    const auto& W = params_[w_idx].w;
    float* gW = grad.data() + offsets_[w_idx];
    float* gb = grad.data() + offsets_[b_idx];
    std::vector<float> gpooled(n_in, 0.0f);
    for (int o = 0; o < n_out; ++o) {
        gb[o] += glogits[o];
        for (int i = 0; i < n_in; ++i) {
            gW[size_t(o) * n_in + i] += glogits[o] * head.pooled[i];
            gpooled[i] += W[size_t(o) * n_in + i] * glogits[o];
        }
    }

    // global average pooling backward
    const Tensor& lowest = enc.pooled.back();
    Tensor glowest(lowest.c, lowest.h, lowest.w);
    const float inv = 1.0f / float(lowest.h * lowest.w);
    for (int c = 0; c < lowest.c; ++c) {
        float g = gpooled[c] * inv;
        float* p = glowest.plane(c);
        std::fill(p, p + size_t(lowest.h) * lowest.w, g);
    }

    // encoder backward with no skip gradients
    const int S = cfg_.stages();
    Tensor gpool = std::move(glowest);
    for (int s = S - 1; s >= 0; --s) {
        const auto& idx = enc_idx_[s];
        Tensor gbm;
        maxpool2_backward(gpool, enc.pool_argmax[s], gbm, enc.stage_b[s].h,
                          enc.stage_b[s].w);
        relu_backward_inplace(enc.stage_b[s], gbm);
        Tensor ga;
        conv2d_backward(params_[idx.w2].w, enc.stage_a[s], gbm, ga,
                        grad.data() + offsets_[idx.w2], grad.data() + offsets_[idx.b2],
                        cfg_.stage_channels[s], 3);
        relu_backward_inplace(enc.stage_a[s], ga);
        const Tensor& below = s == 0 ? enc.input : enc.pooled[s - 1];
        Tensor gx;
        conv2d_backward(params_[idx.w1].w, below, ga, gx,
                        grad.data() + offsets_[idx.w1], grad.data() + offsets_[idx.b1],
                        cfg_.stage_channels[s], 3);
        gpool = std::move(gx);
    }
}

void Network::check_gradients(const std::vector<float>& grad) const {
    for (size_t pi = 0; pi < params_.size(); ++pi) {
        const size_t off = offsets_[pi];
        for (size_t i = 0; i < params_[pi].size(); ++i) {
            if (!std::isfinite(grad[off + i]))
                throw NumericError("non-finite gradient in " + params_[pi].name);
        }
    }
}

void Network::adopt_encoder(const Network& other) {
    for (auto& p : params_) {
        if (p.name.rfind("enc", 0) != 0) continue;
        for (const auto& q : other.params_) {
            if (q.name == p.name) {
                if (q.w.size() != p.w.size())
                    throw std::invalid_argument("adopt_encoder: shape mismatch at " + p.name);
                p.w = q.w;
                break;
            }
        }
    }
}

void ema_update(Network& teacher, const Network& student, double decay) {
    auto& tp = teacher.params();
    const auto& sp = student.params();
    if (tp.size() != sp.size()) throw std::invalid_argument("ema_update: param count mismatch");
    for (size_t i = 0; i < tp.size(); ++i) {
        if (tp[i].w.size() != sp[i].w.size() || tp[i].name != sp[i].name)
            throw std::invalid_argument("ema_update: shape mismatch at " + tp[i].name);
        float* t = tp[i].w.data();
        const float* s = sp[i].w.data();
        for (size_t j = 0; j < tp[i].w.size(); ++j)
            t[j] = float(decay * double(t[j]) + (1.0 - decay) * double(s[j]));
    }
}

}  // namespace smorph
