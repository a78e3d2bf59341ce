#include "smorph/tune.hpp"

#include <algorithm>
#include <cmath>

#include "smorph/morphology.hpp"

namespace smorph {

int dilations_at(const CurriculumSchedule& schedule, int epoch) {
    if (schedule.start_dilations < schedule.end_dilations || schedule.end_dilations < 0)
        throw std::invalid_argument("curriculum: need start >= end >= 0");
    if (epoch < 0 || epoch >= schedule.total_epochs)
        throw std::invalid_argument("curriculum: epoch out of range");
    if (schedule.total_epochs == 1) return schedule.end_dilations;
    double t = double(epoch) / double(schedule.total_epochs - 1);
    double v = schedule.start_dilations +
               (schedule.end_dilations - schedule.start_dilations) * t;
    return int(std::lround(v));
}

ImageCrop apply_curriculum_mask(const ImageCrop& img, const BinaryMask& teacher_mask,
                                int n_dilations, uint32_t* flags) {
    if (teacher_mask.height != img.height || teacher_mask.width != img.width)
        throw std::invalid_argument("apply_curriculum_mask: shape mismatch");
    if (teacher_mask.empty()) {
        if (flags) *flags |= kFlagEmptyTeacherMask;
        return img;
    }
    BinaryMask fg = dilate(teacher_mask, n_dilations);
    ImageCrop out(img.height, img.width, img.channels, 1.0f);
    for (int i = 0; i < img.height * img.width; ++i) {
        if (!fg.bits[i]) continue;
        for (int c = 0; c < img.channels; ++c)
            out.data[size_t(i) * img.channels + c] = img.data[size_t(i) * img.channels + c];
    }
    return out;
}

TTAPolicy TTAPolicy::mild6() {
    TTAPolicy p;
    for (double deg : {0.0, -10.0, 10.0})
        for (int flip = 0; flip < 2; ++flip) p.views.push_back(View{deg, flip != 0});
    return p;
}

TTAPolicy TTAPolicy::flips() {
    return TTAPolicy{{View{0.0, false}, View{0.0, true}}};
}

TTAPolicy TTAPolicy::full8() {
    TTAPolicy p;
    for (int flip = 0; flip < 2; ++flip)
        for (int k = 0; k < 4; ++k) p.views.push_back(View{90.0 * k, flip != 0});
    return p;
}

TTAPolicy TTAPolicy::by_name(const std::string& name) {
    if (name == "identity") return identity();
    if (name == "mild6") return mild6();
    if (name == "flips") return flips();
    if (name == "full8") return full8();
    throw UsageError("unknown TTA policy: " + name);
}

namespace {

uint64_t derive_seed(uint64_t base, uint64_t a, uint64_t b, uint64_t c) {
    uint64_t z = base + 0x9e3779b97f4a7c15ull * (a + 1) +
                 0xc2b2ae3d27d4eb4full * (b + 1) + 0x165667b19e3779f9ull * (c + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// gradient with respect to logits, composed through the softmax Jacobian
std::vector<float> softmax_backward(const std::vector<float>& probs,
                                    const std::vector<float>& grad_probs) {
    double dot = 0.0;
    for (size_t i = 0; i < probs.size(); ++i) dot += double(probs[i]) * grad_probs[i];
    std::vector<float> g(probs.size());
    for (size_t i = 0; i < probs.size(); ++i)
        g[i] = float(double(probs[i]) * (double(grad_probs[i]) - dot));
    return g;
}

int argmax(const std::vector<double>& v) {
    return int(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

std::vector<EpochLog> soft_tune(Network& model, const std::vector<TuneSample>& data,
                                const TuneConfig& cfg, const TuneObserver& observer) {
    if (data.empty()) throw DataError("soft_tune: empty dataset");
    const int input_size = model.config().input_size;
    const int n_params_total = int(model.param_count());

    // optional validation split carved off a seeded shuffle
    std::vector<int> order(data.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = int(i);
    Rng split_rng(derive_seed(cfg.seed, 7, 0, 0));
    for (size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[split_rng.uniform_index(i)]);
    int n_val = int(std::floor(cfg.val_fraction * double(data.size())));
    std::vector<int> val_idx(order.begin(), order.begin() + n_val);
    std::vector<int> train_idx(order.begin() + n_val, order.end());
    if (train_idx.empty()) throw DataError("soft_tune: no training samples after split");

    const int n = int(train_idx.size());
    const int batch = std::min(cfg.batch_size, n);
    const int batches_per_epoch = (n + batch - 1) / batch;

    Adam adam(model.param_count(), AdamConfig{cfg.lr, 0.9, 0.999, 1e-8});
    std::vector<EpochLog> log;
    std::vector<std::vector<float>> sample_grads(batch);
    std::vector<double> sample_loss(batch);
    std::vector<float> grad(model.param_count());

    Rng shuffle_rng(derive_seed(cfg.seed, 8, 0, 0));

    for (int epoch = 0; epoch < cfg.schedule.total_epochs; ++epoch) {
        const int n_dil = dilations_at(cfg.schedule, epoch);
        const double lr = cfg.decay.lr_at(cfg.lr, epoch);

        // the epoch's masked crops, resized once
        std::vector<ImageCrop> masked(train_idx.size());
        parallel_for(n, cfg.threads, [&](int i) {
            const TuneSample& s = data[train_idx[i]];
            ImageCrop m = apply_curriculum_mask(s.crop, s.teacher_mask, n_dil);
            masked[i] = resize_bilinear(m, input_size, input_size);
        });

        std::vector<int> perm(train_idx.size());
        for (size_t i = 0; i < perm.size(); ++i) perm[i] = int(i);
        for (size_t i = perm.size(); i > 1; --i)
            std::swap(perm[i - 1], perm[shuffle_rng.uniform_index(i)]);

        double epoch_loss = 0.0;
        long seen = 0;
        for (int bi = 0; bi < batches_per_epoch; ++bi) {
            const int lo = bi * batch;
            const int cur = std::min(batch, n - lo);
            std::vector<uint64_t> aug_seed(cur);
            for (int s = 0; s < cur; ++s)
                aug_seed[s] =
                    derive_seed(cfg.seed, uint64_t(epoch), uint64_t(bi) * 4096 + s, 9);

            parallel_for(cur, cfg.threads, [&](int s) {
                const int local = perm[lo + s];
                const TuneSample& sample = data[train_idx[local]];
                AugmentationRecord rec = sample_record(cfg.augment, aug_seed[s]);
                ImageCrop aug = apply_record(masked[local], rec);

                EncoderWorkspace enc;
                HeadWorkspace head;
                std::vector<float> logits = model.forward_cls(to_tensor(aug), enc, head);
                std::vector<float> probs = softmax(logits);

                SoftLabel label = cfg.vanilla_ce
                                      ? SoftLabel::consensus_of(sample.label.c1,
                                                                sample.label.lambda)
                                      : sample.label;
                VectorLossResult ce = soft_ce(probs, label);
                sample_loss[s] = ce.loss;

                std::vector<float> glogits = softmax_backward(probs, ce.grad);
                auto& g = sample_grads[s];
                g.assign(size_t(n_params_total), 0.0f);
                model.backward_cls(glogits, enc, head, g);
            });

            double batch_loss = 0.0;
            for (int s = 0; s < cur; ++s) batch_loss += sample_loss[s];
            if (!std::isfinite(batch_loss))
                throw NumericError("soft_tune: non-finite loss at epoch " +
                                   std::to_string(epoch));
            epoch_loss += batch_loss;
            seen += cur;

            std::fill(grad.begin(), grad.end(), 0.0f);
            const float inv = 1.0f / float(cur);
            for (int s = 0; s < cur; ++s) {
                const auto& g = sample_grads[s];
                for (size_t i = 0; i < g.size(); ++i) grad[i] += g[i] * inv;
            }
            model.check_gradients(grad);
            adam.step(model, grad, lr);
        }

        EpochLog el;
        el.epoch = epoch;
        el.loss = epoch_loss / double(seen);
        el.lr = lr;
        el.dilations = n_dil;

        if (!val_idx.empty()) {
            std::vector<long> correct(val_idx.size(), 0);
            parallel_for(int(val_idx.size()), cfg.threads, [&](int i) {
                const TuneSample& s = data[val_idx[i]];
                ImageCrop m = apply_curriculum_mask(s.crop, s.teacher_mask,
                                                    cfg.eval_mask_dilations);
                ImageCrop resized = resize_bilinear(m, input_size, input_size);
                EncoderWorkspace enc;
                HeadWorkspace head;
                std::vector<float> logits = model.forward_cls(to_tensor(resized), enc, head);
                int pred = int(std::max_element(logits.begin(), logits.end()) -
                               logits.begin());
                correct[i] = pred == s.label.c1 ? 1 : 0;
            });
            long c = 0;
            for (long v : correct) c += v;
            el.val_accuracy = double(c) / double(val_idx.size());
        }

        log.push_back(el);
        if (observer) observer(epoch, model);
    }
    return log;
}

std::vector<double> tta_predict(const Network& model, const ImageCrop& img,
                                const TTAPolicy& policy) {
    if (policy.views.empty()) throw std::invalid_argument("tta_predict: empty policy");
    const int input_size = model.config().input_size;
    ImageCrop resized = resize_bilinear(img, input_size, input_size);
    Tensor base = to_tensor(resized);

    std::vector<double> mean(model.config().num_classes, 0.0);
    for (const auto& view : policy.views) {
        Tensor t;
        if (view.rotation_deg != 0.0) {
            ImageCrop rotated = rotate(resized, view.rotation_deg, Interp::Bilinear, 1.0f);
            t = to_tensor(rotated);
        } else {
            t = base;
        }
        if (view.vflip) t = vflip(t);
        EncoderWorkspace enc;
        HeadWorkspace head;
        std::vector<float> logits = model.forward_cls(t, enc, head);
        std::vector<float> probs = softmax(logits);
        for (size_t i = 0; i < mean.size(); ++i) mean[i] += double(probs[i]);
    }
    for (double& m : mean) m /= double(policy.views.size());
    return mean;
}

Metrics metrics_from_confusion(const std::vector<std::vector<long>>& confusion) {
    const int k = int(confusion.size());
    Metrics m;
    long diag = 0;
    for (int t = 0; t < k; ++t)
        for (int p = 0; p < k; ++p) {
            m.total += confusion[t][p];
            if (t == p) diag += confusion[t][p];
        }
    if (m.total == 0) throw std::invalid_argument("metrics: empty confusion matrix");
    m.accuracy = double(diag) / double(m.total);

    double rec = 0.0, prec = 0.0, f1 = 0.0;
    int present = 0;
    for (int c = 0; c < k; ++c) {
        long tp = confusion[c][c];
        long truth_total = 0, pred_total = 0;
        for (int j = 0; j < k; ++j) {
            truth_total += confusion[c][j];
            pred_total += confusion[j][c];
        }
        if (truth_total == 0) {
            m.absent_classes.push_back(c);
            continue;
        }
        ++present;
        double r = double(tp) / double(truth_total);
        double p = pred_total > 0 ? double(tp) / double(pred_total) : 0.0;
        rec += r;
        prec += p;
        f1 += (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    }
    if (present == 0) throw std::invalid_argument("metrics: no classes present");
    m.recall = rec / present;
    m.precision = prec / present;
    m.f1 = f1 / present;
    return m;
}

EvalResult evaluate(const Network& model, const std::vector<TuneSample>& test_fold,
                    const TTAPolicy& policy, int eval_mask_dilations, int threads) {
    if (test_fold.empty()) throw DataError("evaluate: empty test fold");
    const int k = model.config().num_classes;
    EvalResult res;
    res.predictions.resize(test_fold.size());

    parallel_for(int(test_fold.size()), threads, [&](int i) {
        const TuneSample& s = test_fold[i];
        ImageCrop masked = apply_curriculum_mask(s.crop, s.teacher_mask,
                                                 eval_mask_dilations);
        PredictionRecord rec;
        rec.id = s.id;
        rec.truth = s.label.c1;
        rec.probs = tta_predict(model, masked, policy);
        rec.predicted = argmax(rec.probs);
        res.predictions[i] = std::move(rec);
    });

    std::vector<std::vector<long>> confusion(k, std::vector<long>(k, 0));
    for (const auto& p : res.predictions) {
        if (p.truth < 0 || p.truth >= k)
            throw DataError("evaluate: label outside the model's class range");
        ++confusion[p.truth][p.predicted];
    }
    res.metrics = metrics_from_confusion(confusion);
    return res;
}

}  // namespace smorph
