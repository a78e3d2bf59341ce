#include "smorph/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "smorph/png_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace smorph {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::string join_ints(const std::vector<int>& v) {
    std::string out;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(v[i]);
    }
    return out;
}

}  // namespace

void RunConfig::validate() const {
    if (dataset_dir.empty()) throw UsageError("config: dataset_dir is required");
    if (out_dir.empty()) throw UsageError("config: out_dir is required");
    if (folds_k < 2) throw UsageError("config: folds_k must be >= 2");
    if (fold < 0 || fold >= folds_k) throw UsageError("config: fold out of range");
    if (hierarchy_levels < 1 || hierarchy_levels > 4)
        throw UsageError("config: hierarchy_levels must be in 1..4");
    if (height_tolerance < 0.0 || height_tolerance > 1.0)
        throw UsageError("config: height_tolerance must be in [0,1]");
    if (dmax_factor <= 0.0) throw UsageError("config: dmax_factor must be positive");
    if (alpha < 0.0 || beta < 0.0 || (alpha == 0.0 && beta == 0.0))
        throw UsageError("config: invalid loss weights");
    if (ema_decay < 0.0 || ema_decay >= 1.0)
        throw UsageError("config: ema_decay must be in [0,1)");
    if (distill_batch < 1 || tune_batch < 1) throw UsageError("config: batch size must be >= 1");
    if (fine_iterations < 0 || coarse_iterations < 0 || tune_epochs < 1)
        throw UsageError("config: iteration counts must be positive");
    if (distill_lr <= 0.0 || tune_lr <= 0.0) throw UsageError("config: learning rates must be positive");
    if (lambda < 0.0 || lambda > 1.0) throw UsageError("config: lambda must be in [0,1]");
    if (curriculum_start < curriculum_end || curriculum_end < 0)
        throw UsageError("config: curriculum must satisfy start >= end >= 0");
    if (teacher_threshold <= 0.0 || teacher_threshold >= 1.0)
        throw UsageError("config: teacher_threshold must be in (0,1)");
    if (val_fraction < 0.0 || val_fraction >= 1.0)
        throw UsageError("config: val_fraction must be in [0,1)");
    if (eval_mask_dilations < 0) throw UsageError("config: eval_mask_dilations must be >= 0");
    if (threads < 0) throw UsageError("config: threads must be >= 0");
    AugmentationPolicy::by_name(distill_augment);
    AugmentationPolicy::by_name(coarse_augment);
    AugmentationPolicy::by_name(tune_augment);
    TTAPolicy::by_name(tta_policy);
    NetConfig nc = net_config(2, 1);
    nc.validate();
}

int RunConfig::effective_threads() const {
    return threads > 0 ? threads : default_thread_count();
}

std::string RunConfig::fold_dir(int f) const {
    return (fs::path(out_dir) / ("fold" + std::to_string(f))).string();
}

std::string RunConfig::stage_dir(int f, const std::string& stage) const {
    return (fs::path(fold_dir(f)) / stage).string();
}

NetConfig RunConfig::net_config(int num_classes, int input_channels) const {
    NetConfig nc;
    nc.input_channels = input_channels;
    nc.input_size = input_size;
    nc.stage_channels = stage_channels;
    nc.decoder_channels = decoder_channels;
    nc.num_classes = num_classes;
    return nc;
}

HpmParams RunConfig::hpm_params() const {
    HpmParams p;
    p.hierarchy_levels = hierarchy_levels;
    p.height_tolerance = height_tolerance;
    p.dmax_factor = dmax_factor;
    return p;
}

void write_resolved_config(const RunConfig& cfg, const std::string& stage_path) {
    std::ofstream os(fs::path(stage_path) / "config_resolved.txt");
    if (!os) throw DataError("cannot write resolved config under " + stage_path);
    os << "dataset_dir = " << cfg.dataset_dir << "\n";
    os << "out_dir = " << cfg.out_dir << "\n";
    os << "fold = " << cfg.fold << "\n";
    os << "folds_k = " << cfg.folds_k << "\n";
    os << "hierarchy_levels = " << cfg.hierarchy_levels << "\n";
    os << "height_tolerance = " << fmt(cfg.height_tolerance) << "\n";
    os << "dmax_factor = " << fmt(cfg.dmax_factor) << "\n";
    os << "input_size = " << cfg.input_size << "\n";
    os << "stage_channels = " << join_ints(cfg.stage_channels) << "\n";
    os << "decoder_channels = " << cfg.decoder_channels << "\n";
    os << "alpha = " << fmt(cfg.alpha) << "\n";
    os << "beta = " << fmt(cfg.beta) << "\n";
    os << "ema_decay = " << fmt(cfg.ema_decay) << "\n";
    os << "distill_batch = " << cfg.distill_batch << "\n";
    os << "fine_iterations = " << cfg.fine_iterations << "\n";
    os << "coarse_iterations = " << cfg.coarse_iterations << "\n";
    os << "distill_lr = " << fmt(cfg.distill_lr) << "\n";
    os << "distill_milestones = " << join_ints(cfg.distill_milestones) << "\n";
    os << "distill_augment = " << cfg.distill_augment << "\n";
    os << "coarse_augment = " << cfg.coarse_augment << "\n";
    os << "teacher_threshold = " << fmt(cfg.teacher_threshold) << "\n";
    os << "lambda = " << fmt(cfg.lambda) << "\n";
    os << "tune_batch = " << cfg.tune_batch << "\n";
    os << "tune_epochs = " << cfg.tune_epochs << "\n";
    os << "curriculum_start = " << cfg.curriculum_start << "\n";
    os << "curriculum_end = " << cfg.curriculum_end << "\n";
    os << "tune_lr = " << fmt(cfg.tune_lr) << "\n";
    os << "tune_milestones = " << join_ints(cfg.tune_milestones) << "\n";
    os << "tune_augment = " << cfg.tune_augment << "\n";
    os << "tta_policy = " << cfg.tta_policy << "\n";
    os << "val_fraction = " << fmt(cfg.val_fraction) << "\n";
    os << "eval_mask_dilations = " << cfg.eval_mask_dilations << "\n";
    os << "skip_pretrain = " << (cfg.skip_pretrain ? 1 : 0) << "\n";
    os << "seed = " << cfg.seed << "\n";
    os << "threads = " << cfg.threads << "\n";
}

ImageCrop hierarchy_to_image(const MaskHierarchy& hier) {
    ImageCrop img(hier.bound.height, hier.bound.width, 1, 0.0f);
    for (int i = 0; i < hier.bound.height * hier.bound.width; ++i) {
        for (int level = 0; level < hier.h(); ++level) {
            if (hier.layers[level].bits[i]) {
                img.data[i] = float(255 - 64 * level) / 255.0f;
                break;
            }
        }
    }
    return img;
}

std::vector<BinaryMask> hierarchy_layers_from_image(const ImageCrop& img, int h) {
    std::vector<BinaryMask> layers;
    for (int level = 0; level < h; ++level) {
        BinaryMask layer(img.height, img.width);
        const float cutoff = (float(255 - 64 * level) - 32.0f) / 255.0f;
        for (int i = 0; i < img.height * img.width; ++i)
            layer.bits[i] = img.data[i] >= cutoff ? 1 : 0;
        layers.push_back(std::move(layer));
    }
    return layers;
}

MaskArtifacts load_mask_artifacts(const std::string& masks_dir, const std::string& id) {
    fs::path dir(masks_dir);
    MaskArtifacts art;
    art.aligned = read_png((dir / ("aligned_" + id + ".png")).string());
    ImageCrop hier_img = read_png((dir / ("hierarchy_" + id + ".png")).string());
    art.nuclear = read_mask_png((dir / ("nuclear_" + id + ".png")).string());
    art.hierarchy.bound = read_mask_png((dir / ("bound_" + id + ".png")).string());

    std::ifstream meta(dir / "masks_meta.jsonl");
    if (!meta) throw DataError("missing masks_meta.jsonl in " + masks_dir);
    std::string line;
    bool found = false;
    int h = 0;
    while (std::getline(meta, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        if (j.at("id").get<std::string>() != id) continue;
        art.rotation_applied = j.at("rotation_applied").get<double>();
        art.flags = flags_from_string(j.at("flags").get<std::string>());
        h = j.at("h").get<int>();
        found = true;
        break;
    }
    if (!found) throw DataError("no masks_meta record for crop " + id);
    art.hierarchy.layers = hierarchy_layers_from_image(hier_img, h);
    return art;
}

void run_masks(const RunConfig& cfg) {
    cfg.validate();
    Dataset ds = load_dataset(cfg.dataset_dir, float(cfg.lambda));
    std::string dir = cfg.stage_dir(cfg.fold, "masks");
    fs::create_directories(dir);
    write_resolved_config(cfg, dir);

    std::vector<PseudoMaskResult> results(ds.crops.size());
    HpmParams params = cfg.hpm_params();
    parallel_for(int(ds.crops.size()), cfg.effective_threads(), [&](int i) {
        ImageCrop img = read_png(ds.crops[i].image_path);
        results[i] = hpm_pipeline(img, cfg.hierarchy_levels, cfg.seed, params);
    });

    std::ofstream meta(fs::path(dir) / "masks_meta.jsonl");
    if (!meta) throw DataError("cannot write masks_meta.jsonl");
    for (size_t i = 0; i < ds.crops.size(); ++i) {
        const std::string& id = ds.crops[i].id;
        const PseudoMaskResult& r = results[i];
        write_png((fs::path(dir) / ("aligned_" + id + ".png")).string(), r.aligned_image);
        write_png((fs::path(dir) / ("hierarchy_" + id + ".png")).string(),
                  hierarchy_to_image(r.hierarchy));
        write_mask_png((fs::path(dir) / ("bound_" + id + ".png")).string(),
                       r.hierarchy.bound);
        write_mask_png((fs::path(dir) / ("nuclear_" + id + ".png")).string(),
                       r.nuclear_mask);
        json j;
        j["id"] = id;
        j["rotation_applied"] = r.rotation_applied;
        j["flags"] = flags_to_string(r.quality_flags);
        j["h"] = r.hierarchy.h();
        meta << j.dump() << "\n";
    }
}

namespace {

struct FoldData {
    Dataset ds;
    FoldSplit split;
    std::vector<DistillSample> all_samples;  // dataset order
    std::vector<int> train, test;            // crop indices
};

FoldData load_fold_data(const RunConfig& cfg) {
    FoldData fd;
    fd.ds = load_dataset(cfg.dataset_dir, float(cfg.lambda));
    fd.split = make_folds(fd.ds, cfg.folds_k, cfg.seed);
    fd.train = fd.split.train_indices(cfg.fold);
    fd.test = fd.split.test_indices(cfg.fold);

    std::string masks_dir = cfg.stage_dir(cfg.fold, "masks");
    fd.all_samples.resize(fd.ds.crops.size());
    parallel_for(int(fd.ds.crops.size()), cfg.effective_threads(), [&](int i) {
        MaskArtifacts art = load_mask_artifacts(masks_dir, fd.ds.crops[i].id);
        fd.all_samples[i] = make_distill_sample(fd.ds.crops[i].id, std::move(art.aligned),
                                                std::move(art.hierarchy), cfg.input_size);
    });
    return fd;
}

void write_loss_csv(const std::string& path, const std::vector<IterationLog>& fine,
                    const std::vector<IterationLog>& coarse) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot write " + path);
    os << "iteration,seg,con,rot,lr\n";
    for (const auto& l : fine)
        os << l.iteration << "," << fmt(l.seg) << "," << fmt(l.con) << "," << fmt(l.rot)
           << "," << fmt(l.lr) << "\n";
    int offset = int(fine.size());
    for (const auto& l : coarse)
        os << (l.iteration + offset) << "," << fmt(l.seg) << "," << fmt(l.con) << ","
           << fmt(l.rot) << "," << fmt(l.lr) << "\n";
}

DistillConfig distill_config(const RunConfig& cfg) {
    DistillConfig dc;
    dc.weights = LossWeights{float(cfg.alpha), float(cfg.beta)};
    dc.ema_decay = cfg.ema_decay;
    dc.batch_size = cfg.distill_batch;
    dc.fine_iterations = cfg.fine_iterations;
    dc.coarse_iterations = cfg.coarse_iterations;
    dc.lr = cfg.distill_lr;
    dc.decay = StepDecaySchedule{cfg.distill_milestones, 0.1};
    dc.augment = AugmentationPolicy::by_name(cfg.distill_augment);
    dc.coarse_augment = AugmentationPolicy::by_name(cfg.coarse_augment);
    dc.teacher_mask_threshold = float(cfg.teacher_threshold);
    dc.seed = cfg.seed;
    dc.threads = cfg.effective_threads();
    return dc;
}

std::vector<TuneSample> build_tune_samples(const FoldData& fd,
                                           const std::vector<int>& indices,
                                           const TeacherMaskStore* store,
                                           float lambda) {
    std::vector<TuneSample> out;
    out.reserve(indices.size());
    for (int idx : indices) {
        const auto& crop = fd.ds.crops[idx];
        TuneSample s;
        s.id = crop.id;
        s.crop = fd.all_samples[idx].aligned;
        s.label = crop.soft;
        s.label.lambda = lambda;
        if (store) {
            const BinaryMask* m = store->find(crop.id);
            if (!m) throw DataError("teacher mask store has no entry for " + crop.id);
            s.teacher_mask = *m;
        } else {
            // pretraining skipped: fall back to the HPM innermost mask
            s.teacher_mask = fd.all_samples[idx].hierarchy.innermost();
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace

void run_pretrain(const RunConfig& cfg) {
    cfg.validate();
    if (cfg.skip_pretrain) return;
    FoldData fd = load_fold_data(cfg);
    std::string dir = cfg.stage_dir(cfg.fold, "pretrain");
    fs::create_directories(dir);
    write_resolved_config(cfg, dir);

    std::vector<DistillSample> train_samples;
    for (int idx : fd.train) train_samples.push_back(fd.all_samples[idx]);

    NetConfig nc = cfg.net_config(fd.ds.num_classes, fd.ds.channels);
    StudentTeacherPair pair = StudentTeacherPair::make(nc, cfg.seed, cfg.ema_decay);
    DistillConfig dc = distill_config(cfg);

    std::string ckpt = (fs::path(dir) / "checkpoint.bin").string();
    std::vector<IterationLog> fine_log, coarse_log;
    try {
        fine_log = fine_distill(pair, train_samples, dc);
        TeacherMaskStore store =
            export_teacher_masks(pair, fd.all_samples, dc.teacher_mask_threshold,
                                 dc.threads);
        store.save((fs::path(dir) / "teacher_masks.bin").string());
        coarse_log = coarse_distill(pair, train_samples, dc);
    } catch (const NumericError&) {
        // abort with the last finished iteration preserved
        save_networks(ckpt, {{"student", &pair.student}, {"teacher", &pair.teacher}});
        write_loss_csv((fs::path(dir) / "loss_curve.csv").string(), fine_log, coarse_log);
        throw;
    }
    save_networks(ckpt, {{"student", &pair.student}, {"teacher", &pair.teacher}});
    write_loss_csv((fs::path(dir) / "loss_curve.csv").string(), fine_log, coarse_log);
}

void run_tune(const RunConfig& cfg) {
    cfg.validate();
    FoldData fd = load_fold_data(cfg);
    std::string dir = cfg.stage_dir(cfg.fold, "tune");
    fs::create_directories(dir);
    write_resolved_config(cfg, dir);

    TeacherMaskStore store;
    bool have_store = false;
    if (!cfg.skip_pretrain) {
        store = TeacherMaskStore::load(
            (fs::path(cfg.stage_dir(cfg.fold, "pretrain")) / "teacher_masks.bin").string());
        have_store = true;
    }

    NetConfig nc = cfg.net_config(fd.ds.num_classes, fd.ds.channels);
    Network model(nc, cfg.seed + 0x7071u);
    if (!cfg.skip_pretrain) {
        auto nets = load_networks(
            (fs::path(cfg.stage_dir(cfg.fold, "pretrain")) / "checkpoint.bin").string());
        auto it = nets.find("teacher");
        if (it == nets.end()) throw DataError("pretrain checkpoint has no teacher network");
        model.adopt_encoder(it->second);
    }

    std::vector<TuneSample> train = build_tune_samples(
        fd, fd.train, have_store ? &store : nullptr, float(cfg.lambda));

    TuneConfig tc;
    tc.schedule = CurriculumSchedule{cfg.curriculum_start, cfg.curriculum_end,
                                     cfg.tune_epochs};
    tc.augment = AugmentationPolicy::by_name(cfg.tune_augment);
    tc.batch_size = cfg.tune_batch;
    tc.lr = cfg.tune_lr;
    tc.decay = StepDecaySchedule{cfg.tune_milestones, 0.1};
    tc.val_fraction = cfg.val_fraction;
    tc.eval_mask_dilations = cfg.eval_mask_dilations;
    tc.seed = cfg.seed;
    tc.threads = cfg.effective_threads();

    std::string ckpt = (fs::path(dir) / "classifier.bin").string();
    std::vector<EpochLog> log;
    try {
        log = soft_tune(model, train, tc);
    } catch (const NumericError&) {
        save_networks(ckpt, {{"classifier", &model}});
        throw;
    }
    save_networks(ckpt, {{"classifier", &model}});

    std::ofstream os(fs::path(dir) / "tune_log.csv");
    if (!os) throw DataError("cannot write tune_log.csv");
    os << "epoch,loss,val_accuracy,lr,dilations\n";
    for (const auto& l : log)
        os << l.epoch << "," << fmt(l.loss) << "," << fmt(l.val_accuracy) << ","
           << fmt(l.lr) << "," << l.dilations << "\n";
}

Metrics run_eval(const RunConfig& cfg) {
    cfg.validate();
    FoldData fd = load_fold_data(cfg);
    std::string dir = cfg.stage_dir(cfg.fold, "eval");
    fs::create_directories(dir);
    write_resolved_config(cfg, dir);

    TeacherMaskStore store;
    bool have_store = false;
    if (!cfg.skip_pretrain) {
        store = TeacherMaskStore::load(
            (fs::path(cfg.stage_dir(cfg.fold, "pretrain")) / "teacher_masks.bin").string());
        have_store = true;
    }
    auto nets = load_networks(
        (fs::path(cfg.stage_dir(cfg.fold, "tune")) / "classifier.bin").string());
    auto it = nets.find("classifier");
    if (it == nets.end()) throw DataError("tune checkpoint has no classifier network");

    std::vector<TuneSample> test = build_tune_samples(
        fd, fd.test, have_store ? &store : nullptr, float(cfg.lambda));
    EvalResult res = evaluate(it->second, test, TTAPolicy::by_name(cfg.tta_policy),
                              cfg.eval_mask_dilations, cfg.effective_threads());

    std::ofstream metrics_csv(fs::path(dir) / "metrics.csv");
    if (!metrics_csv) throw DataError("cannot write metrics.csv");
    metrics_csv << "fold,accuracy,recall,precision,f1\n";
    metrics_csv << cfg.fold << "," << fmt(res.metrics.accuracy) << ","
                << fmt(res.metrics.recall) << "," << fmt(res.metrics.precision) << ","
                << fmt(res.metrics.f1) << "\n";

    std::ofstream preds_csv(fs::path(dir) / "predictions.csv");
    if (!preds_csv) throw DataError("cannot write predictions.csv");
    preds_csv << "id,truth,predicted,probs\n";
    for (const auto& p : res.predictions) {
        preds_csv << p.id << "," << p.truth << "," << p.predicted << ",";
        for (size_t i = 0; i < p.probs.size(); ++i)
            preds_csv << (i ? ";" : "") << fmt(p.probs[i]);
        preds_csv << "\n";
    }
    return res.metrics;
}

void run_overlay(const RunConfig& cfg, const std::string& crop_id) {
    cfg.validate();
    std::string masks_dir = cfg.stage_dir(cfg.fold, "masks");
    MaskArtifacts art = load_mask_artifacts(masks_dir, crop_id);
    Dataset ds = load_dataset(cfg.dataset_dir, float(cfg.lambda));
    const LabeledCrop* crop = ds.find(crop_id);
    if (!crop) throw DataError("overlay: unknown crop id " + crop_id);
    ImageCrop original = read_png(crop->image_path);

    // optional teacher mask panel
    ImageCrop teacher_panel;
    bool have_teacher = false;
    fs::path store_path = fs::path(cfg.stage_dir(cfg.fold, "pretrain")) /
                          "teacher_masks.bin";
    if (fs::exists(store_path)) {
        TeacherMaskStore store = TeacherMaskStore::load(store_path.string());
        if (const BinaryMask* m = store.find(crop_id)) {
            teacher_panel = ImageCrop(m->height, m->width, 1);
            for (size_t i = 0; i < m->bits.size(); ++i)
                teacher_panel.data[i] = m->bits[i] ? 1.0f : 0.0f;
            have_teacher = true;
        }
    }

    std::vector<ImageCrop> panels;
    panels.push_back(to_gray(original));
    panels.push_back(to_gray(art.aligned));
    panels.push_back(hierarchy_to_image(art.hierarchy));
    if (have_teacher) panels.push_back(teacher_panel);

    int H = 0, W = 0;
    for (const auto& p : panels) {
        H = std::max(H, p.height);
        W += p.width + 2;
    }
    ImageCrop sheet(H, W, 1, 1.0f);
    int x_off = 0;
    for (const auto& p : panels) {
        for (int y = 0; y < p.height; ++y)
            for (int x = 0; x < p.width; ++x) sheet.at(y, x_off + x) = p.at(y, x);
        x_off += p.width + 2;
    }
    std::string dir = cfg.stage_dir(cfg.fold, "overlay");
    fs::create_directories(dir);
    write_png((fs::path(dir) / ("overlay_" + crop_id + ".png")).string(), sheet);
}

RunAllResult run_all(const RunConfig& base, const std::vector<int>& folds_arg) {
    base.validate();
    std::vector<int> folds = folds_arg;
    if (folds.empty())
        for (int f = 0; f < base.folds_k; ++f) folds.push_back(f);

    RunAllResult result;
    result.folds = folds;
    for (int f : folds) {
        RunConfig cfg = base;
        cfg.fold = f;
        run_masks(cfg);
        if (!cfg.skip_pretrain) run_pretrain(cfg);
        run_tune(cfg);
        result.per_fold.push_back(run_eval(cfg));
    }

    auto agg = [&](auto get) {
        double mean = 0.0;
        for (const auto& m : result.per_fold) mean += get(m);
        mean /= double(result.per_fold.size());
        double var = 0.0;
        for (const auto& m : result.per_fold) {
            double d = get(m) - mean;
            var += d * d;
        }
        var /= double(result.per_fold.size());
        return std::pair<double, double>(mean, std::sqrt(var));
    };
    auto [acc_m, acc_s] = agg([](const Metrics& m) { return m.accuracy; });
    auto [rec_m, rec_s] = agg([](const Metrics& m) { return m.recall; });
    auto [pre_m, pre_s] = agg([](const Metrics& m) { return m.precision; });
    auto [f1_m, f1_s] = agg([](const Metrics& m) { return m.f1; });
    result.mean = Metrics{acc_m, rec_m, pre_m, f1_m, 0, {}};
    result.stddev = Metrics{acc_s, rec_s, pre_s, f1_s, 0, {}};

    fs::create_directories(base.out_dir);
    std::ofstream runs(fs::path(base.out_dir) / "runs.csv");
    if (!runs) throw DataError("cannot write runs.csv");
    runs << "fold,accuracy,recall,precision,f1\n";
    for (size_t i = 0; i < folds.size(); ++i) {
        const Metrics& m = result.per_fold[i];
        runs << folds[i] << "," << fmt(m.accuracy) << "," << fmt(m.recall) << ","
             << fmt(m.precision) << "," << fmt(m.f1) << "\n";
    }
    std::ofstream summary(fs::path(base.out_dir) / "summary.csv");
    if (!summary) throw DataError("cannot write summary.csv");
    summary << "metric,mean,std\n";
    summary << "accuracy," << fmt(acc_m) << "," << fmt(acc_s) << "\n";
    summary << "recall," << fmt(rec_m) << "," << fmt(rec_s) << "\n";
    summary << "precision," << fmt(pre_m) << "," << fmt(pre_s) << "\n";
    summary << "f1," << fmt(f1_m) << "," << fmt(f1_s) << "\n";
    return result;
}

}  // namespace smorph
