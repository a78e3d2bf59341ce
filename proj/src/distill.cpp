#include "smorph/distill.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "smorph/losses.hpp"
#include "smorph/morphology.hpp"

namespace smorph {

DistillSample make_distill_sample(std::string id, ImageCrop aligned,
                                  MaskHierarchy hierarchy, int input_size) {
    DistillSample s;
    s.id = std::move(id);
    s.resized = resize_bilinear(aligned, input_size, input_size);
    s.fg = resize_nearest(hierarchy.innermost(), input_size, input_size);
    s.outer = resize_nearest(hierarchy.outermost(), input_size, input_size);
    s.aligned = std::move(aligned);
    s.hierarchy = std::move(hierarchy);
    return s;
}

namespace {

// deterministic per-(iteration, slot, stream) seed derived on the main thread
uint64_t derive_seed(uint64_t base, uint64_t a, uint64_t b, uint64_t c) {
    uint64_t z = base + 0x9e3779b97f4a7c15ull * (a + 1) +
                 0xc2b2ae3d27d4eb4full * (b + 1) + 0x165667b19e3779f9ull * (c + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

struct BatchSampler {
    std::vector<int> order;
    size_t cursor = 0;
    Rng rng;

    BatchSampler(int n, uint64_t seed) : rng(seed) {
        order.resize(n);
        for (int i = 0; i < n; ++i) order[i] = i;
        reshuffle();
    }
    void reshuffle() {
        for (size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng.uniform_index(i)]);
        cursor = 0;
    }
    int next() {
        if (cursor >= order.size()) reshuffle();
        return order[cursor++];
    }
};

}  // namespace

std::vector<IterationLog> fine_distill(StudentTeacherPair& pair,
                                       const std::vector<DistillSample>& data,
                                       const DistillConfig& cfg,
                                       const DistillObserver& observer) {
    if (data.empty()) throw DataError("fine_distill: empty dataset");
    const int n = int(data.size());
    const int batch = std::min(cfg.batch_size, n);
    const size_t n_params = pair.student.param_count();

    Adam adam(n_params, AdamConfig{cfg.lr, 0.9, 0.999, 1e-8});
    BatchSampler sampler(n, derive_seed(cfg.seed, 0, 0, 1));
    std::vector<IterationLog> log;
    log.reserve(cfg.fine_iterations);

    std::vector<std::vector<float>> sample_grads(batch);
    std::vector<double> sample_seg(batch), sample_con(batch);
    std::vector<float> grad(n_params);

    for (int iter = 0; iter < cfg.fine_iterations; ++iter) {
        // draw batch indices and per-slot seeds on the main thread
        std::vector<int> idx(batch);
        std::vector<uint64_t> seed1(batch), seed2(batch);
        for (int s = 0; s < batch; ++s) {
            idx[s] = sampler.next();
            seed1[s] = derive_seed(cfg.seed, uint64_t(iter), uint64_t(s), 2);
            seed2[s] = derive_seed(cfg.seed, uint64_t(iter), uint64_t(s), 3);
        }

        parallel_for(batch, cfg.threads, [&](int s) {
            const DistillSample& sample = data[idx[s]];
            AugmentationRecord rec1 = sample_record(cfg.augment, seed1[s]);
            AugmentationRecord rec2 = sample_record(cfg.augment, seed2[s]);

            ImageCrop student_img = apply_record(sample.resized, rec1);
            ImageCrop teacher_img = apply_record(sample.resized, rec2);

            // hierarchy masks follow the student's geometric transform
            MaskHierarchy hier;
            hier.layers.push_back(warp_mask(sample.fg, rec1));
            if (sample.hierarchy.h() > 1) hier.layers.push_back(warp_mask(sample.outer, rec1));
            hier.bound = hier.layers.back();

            EncoderWorkspace enc_s, enc_t;
            DecoderWorkspace dec_s, dec_t;
            ProbMap ys = pair.student.forward_seg(to_tensor(student_img), enc_s, dec_s);
            ProbMap yt = pair.teacher.forward_seg(to_tensor(teacher_img), enc_t, dec_t);

            SegLossResult seg = seg_partial_ce(ys, hier);
            ConsistencyResult con = consistency(ys, yt, rec1, rec2);
            sample_seg[s] = seg.loss;
            sample_con[s] = con.loss;

            FloatPlane gmap(ys.height, ys.width, 0.0f);
            const float a = cfg.weights.alpha, b = cfg.weights.beta;
            for (size_t i = 0; i < gmap.v.size(); ++i)
                gmap.v[i] = a * seg.grad.v[i] + b * con.grad_student.v[i];

            auto& g = sample_grads[s];
            g.assign(n_params, 0.0f);
            pair.student.backward_seg(gmap, enc_s, dec_s, g);
        });

        double seg_mean = 0.0, con_mean = 0.0;
        for (int s = 0; s < batch; ++s) {
            seg_mean += sample_seg[s];
            con_mean += sample_con[s];
        }
        seg_mean /= batch;
        con_mean /= batch;
        double total = fine_total(seg_mean, con_mean, cfg.weights);
        if (!std::isfinite(total))
            throw NumericError("fine_distill: non-finite loss at iteration " +
                               std::to_string(iter));

        // deterministic reduction in slot order
        std::fill(grad.begin(), grad.end(), 0.0f);
        const float inv_batch = 1.0f / float(batch);
        for (int s = 0; s < batch; ++s) {
            const auto& g = sample_grads[s];
            for (size_t i = 0; i < n_params; ++i) grad[i] += g[i] * inv_batch;
        }
        pair.student.check_gradients(grad);

        int epoch = iter * batch / n;
        double lr = cfg.decay.lr_at(cfg.lr, epoch);
        adam.step(pair.student, grad, lr);
        ema_update(pair.teacher, pair.student, cfg.ema_decay);

        log.push_back(IterationLog{iter, seg_mean, con_mean, 0.0, lr});
        if (observer) observer(iter, pair.student, pair.teacher);
    }
    return log;
}

std::vector<IterationLog> coarse_distill(StudentTeacherPair& pair,
                                         const std::vector<DistillSample>& data,
                                         const DistillConfig& cfg,
                                         const DistillObserver& observer) {
    if (data.empty()) throw DataError("coarse_distill: empty dataset");
    const int n = int(data.size());
    const int batch = std::min(cfg.batch_size, n);
    const size_t n_params = pair.student.param_count();

    // fresh optimizer state: the decoder receives no gradient in this phase
    // and must not drift on stale momentum
    Adam adam(n_params, AdamConfig{cfg.lr, 0.9, 0.999, 1e-8});
    BatchSampler sampler(n, derive_seed(cfg.seed, 1, 0, 1));
    std::vector<IterationLog> log;
    log.reserve(cfg.coarse_iterations);

    std::vector<std::vector<float>> sample_grads(batch);
    std::vector<double> sample_rot(batch);
    std::vector<float> grad(n_params);

    for (int iter = 0; iter < cfg.coarse_iterations; ++iter) {
        std::vector<int> idx(batch);
        std::vector<uint64_t> aug_seed(batch);
        std::vector<int> target(batch);
        for (int s = 0; s < batch; ++s) {
            idx[s] = sampler.next();
            aug_seed[s] = derive_seed(cfg.seed, uint64_t(iter), uint64_t(s), 4);
            target[s] = coarse_rotation_label(cfg.seed, iter, s);
        }

        parallel_for(batch, cfg.threads, [&](int s) {
            const DistillSample& sample = data[idx[s]];
            AugmentationRecord rec = sample_record(cfg.coarse_augment, aug_seed[s]);
            ImageCrop aug = apply_record(sample.resized, rec);
            Tensor input = rot90(to_tensor(aug), target[s]);

            EncoderWorkspace enc;
            HeadWorkspace head;
            std::array<float, 4> logits = pair.student.forward_rot(input, enc, head);
            VectorLossResult rot = rotation_ce(logits, target[s]);
            sample_rot[s] = rot.loss;

            auto& g = sample_grads[s];
            g.assign(n_params, 0.0f);
            std::array<float, 4> gl{rot.grad[0], rot.grad[1], rot.grad[2], rot.grad[3]};
            pair.student.backward_rot(gl, enc, head, g);
        });

        double rot_mean = 0.0;
        for (int s = 0; s < batch; ++s) rot_mean += sample_rot[s];
        rot_mean /= batch;
        if (!std::isfinite(rot_mean))
            throw NumericError("coarse_distill: non-finite loss at iteration " +
                               std::to_string(iter));

        std::fill(grad.begin(), grad.end(), 0.0f);
        const float inv_batch = 1.0f / float(batch);
        for (int s = 0; s < batch; ++s) {
            const auto& g = sample_grads[s];
            for (size_t i = 0; i < n_params; ++i) grad[i] += g[i] * inv_batch;
        }
        pair.student.check_gradients(grad);

        int epoch = iter * batch / n;
        double lr = cfg.decay.lr_at(cfg.lr, epoch);
        adam.step(pair.student, grad, lr);
        ema_update(pair.teacher, pair.student, cfg.ema_decay);

        log.push_back(IterationLog{iter, 0.0, 0.0, rot_mean, lr});
        if (observer) observer(iter, pair.student, pair.teacher);
    }
    return log;
}

int coarse_rotation_label(uint64_t seed, int iteration, int slot) {
    return int(derive_seed(seed, uint64_t(iteration), uint64_t(slot), 5) % 4);
}

TeacherMaskStore export_teacher_masks(const StudentTeacherPair& pair,
                                      const std::vector<DistillSample>& data,
                                      float threshold, int threads) {
    TeacherMaskStore store;
    store.threshold = threshold;
    std::vector<TeacherMaskEntry> results(data.size());

    parallel_for(int(data.size()), threads, [&](int i) {
        const DistillSample& sample = data[i];
        EncoderWorkspace enc;
        DecoderWorkspace dec;
        ProbMap prob = pair.teacher.forward_seg(to_tensor(sample.resized), enc, dec);

        BinaryMask pred(prob.height, prob.width);
        for (size_t p = 0; p < prob.v.size(); ++p)
            pred.bits[p] = prob.v[p] > threshold ? 1 : 0;
        pred = largest_component(pred);

        TeacherMaskEntry entry;
        if (pred.empty()) {
            entry.mask = sample.hierarchy.innermost();
            entry.flags |= kFlagEmptyTeacherMask;
        } else {
            entry.mask = largest_component(
                resize_nearest(pred, sample.aligned.height, sample.aligned.width));
            if (entry.mask.empty()) {
                entry.mask = sample.hierarchy.innermost();
                entry.flags |= kFlagEmptyTeacherMask;
            }
        }
        results[i] = std::move(entry);
    });

    for (size_t i = 0; i < data.size(); ++i)
        store.entries.emplace(data[i].id, std::move(results[i]));
    return store;
}

namespace {
constexpr char kStoreMagic[4] = {'S', 'M', 'T', 'M'};
constexpr uint32_t kStoreVersion = 1;
}  // namespace

void TeacherMaskStore::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("teacher mask store: cannot write " + path);
    os.write(kStoreMagic, 4);
    uint32_t v = kStoreVersion;
    os.write(reinterpret_cast<const char*>(&v), 4);
    os.write(reinterpret_cast<const char*>(&threshold), 4);
    uint32_t count = uint32_t(entries.size());
    os.write(reinterpret_cast<const char*>(&count), 4);
    for (const auto& [id, entry] : entries) {
        uint32_t len = uint32_t(id.size());
        os.write(reinterpret_cast<const char*>(&len), 4);
        os.write(id.data(), len);
        uint32_t h = uint32_t(entry.mask.height), w = uint32_t(entry.mask.width);
        os.write(reinterpret_cast<const char*>(&h), 4);
        os.write(reinterpret_cast<const char*>(&w), 4);
        os.write(reinterpret_cast<const char*>(&entry.flags), 4);
        os.write(reinterpret_cast<const char*>(entry.mask.bits.data()),
                 std::streamsize(entry.mask.bits.size()));
    }
    if (!os) throw DataError("teacher mask store: short write on " + path);
}

TeacherMaskStore TeacherMaskStore::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("teacher mask store: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kStoreMagic, 4) != 0)
        throw DataError("teacher mask store: bad magic in " + path);
    uint32_t version = 0, count = 0;
    is.read(reinterpret_cast<char*>(&version), 4);
    if (version != kStoreVersion) throw DataError("teacher mask store: unsupported version");
    TeacherMaskStore store;
    is.read(reinterpret_cast<char*>(&store.threshold), 4);
    is.read(reinterpret_cast<char*>(&count), 4);
    for (uint32_t i = 0; i < count; ++i) {
        uint32_t len = 0;
        is.read(reinterpret_cast<char*>(&len), 4);
        if (!is || len > 4096) throw DataError("teacher mask store: corrupt entry");
        std::string id(len, '\0');
        is.read(id.data(), len);
        uint32_t h = 0, w = 0;
        TeacherMaskEntry entry;
        is.read(reinterpret_cast<char*>(&h), 4);
        is.read(reinterpret_cast<char*>(&w), 4);
        is.read(reinterpret_cast<char*>(&entry.flags), 4);
        entry.mask = BinaryMask(int(h), int(w));
        is.read(reinterpret_cast<char*>(entry.mask.bits.data()),
                std::streamsize(entry.mask.bits.size()));
        if (!is) throw DataError("teacher mask store: truncated entry " + id);
        store.entries.emplace(std::move(id), std::move(entry));
    }
    return store;
}

}  // namespace smorph
