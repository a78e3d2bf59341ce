#ifndef SMORPH_TUNE_HPP
#define SMORPH_TUNE_HPP

#include <functional>
#include <string>
#include <vector>

#include "smorph/distill.hpp"
#include "smorph/losses.hpp"
#include "smorph/net.hpp"
#include "smorph/optim.hpp"

namespace smorph {

struct CurriculumSchedule {
    int start_dilations = 15;
    int end_dilations = 0;
    int total_epochs = 30;
};

// Linear schedule, rounded to the nearest count. A single-epoch schedule
// returns the end value.
int dilations_at(const CurriculumSchedule& schedule, int epoch);

// Foreground = teacher mask dilated n times; everything else turns white.
// An empty mask leaves the image unmasked and raises a flag.
ImageCrop apply_curriculum_mask(const ImageCrop& img, const BinaryMask& teacher_mask,
                                int n_dilations, uint32_t* flags = nullptr);

struct TTAPolicy {
    struct View {
        double rotation_deg = 0.0;  // applied first, white fill
        bool vflip = false;
    };
    std::vector<View> views;

    static TTAPolicy identity() { return TTAPolicy{{View{0.0, false}}}; }
    // mild in-distribution views: {-10, 0, +10} degrees x {flip, no flip};
    // matches the tuning augmentations, so every view stays right-aligned
    static TTAPolicy mild6();
    // vertical flip only
    static TTAPolicy flips();
    // the 8 right-angle raster symmetries (out of distribution for an
    // aligned classifier; kept for diagnostics)
    static TTAPolicy full8();
    static TTAPolicy by_name(const std::string& name);
};

struct TuneSample {
    std::string id;
    ImageCrop crop;           // aligned crop, source dims
    BinaryMask teacher_mask;  // source dims
    SoftLabel label;
};

struct TuneConfig {
    CurriculumSchedule schedule;
    AugmentationPolicy augment = AugmentationPolicy::scian_mild();
    int batch_size = 16;
    double lr = 1.5e-4;  // default Adam, step decay at epochs 14 and 23
    StepDecaySchedule decay{{14, 23}, 0.1};
    double val_fraction = 0.0;
    int eval_mask_dilations = 0;
    bool vanilla_ce = false;  // plain cross-entropy on the majority class
    uint64_t seed = 1;
    int threads = 1;
};

struct EpochLog {
    int epoch = 0;
    double loss = 0.0;
    double val_accuracy = -1.0;  // -1 when no validation split
    double lr = 0.0;
    int dilations = 0;
};

using TuneObserver = std::function<void(int epoch, const Network& model)>;

// Curriculum-masked classification tuning with the soft cross-entropy loss.
// The model (encoder + class head) trains end to end.
std::vector<EpochLog> soft_tune(Network& model, const std::vector<TuneSample>& data,
                                const TuneConfig& cfg,
                                const TuneObserver& observer = nullptr);

// Mean softmax over the policy's views; the image is resized to the network
// input internally.
std::vector<double> tta_predict(const Network& model, const ImageCrop& img,
                                const TTAPolicy& policy);

struct Metrics {
    double accuracy = 0.0;
    double recall = 0.0;     // macro
    double precision = 0.0;  // macro
    double f1 = 0.0;         // macro, mean of per-class F1
    long total = 0;
    std::vector<int> absent_classes;  // excluded from macro averages
};

struct PredictionRecord {
    std::string id;
    int truth = 0;
    int predicted = 0;
    std::vector<double> probs;
};

// Macro metrics from a confusion matrix (rows = truth, cols = prediction);
// classes with no ground-truth samples are excluded from the macro averages.
Metrics metrics_from_confusion(const std::vector<std::vector<long>>& confusion);

struct EvalResult {
    Metrics metrics;
    std::vector<PredictionRecord> predictions;
};

// TTA evaluation of a tuned model on a held-out fold; ground truth is the
// majority vote. Test crops get the same n=eval_mask_dilations masking the
// curriculum converges to.
EvalResult evaluate(const Network& model, const std::vector<TuneSample>& test_fold,
                    const TTAPolicy& policy, int eval_mask_dilations = 0,
                    int threads = 1);

}  // namespace smorph

#endif
