#ifndef SMORPH_PIPELINE_HPP
#define SMORPH_PIPELINE_HPP

#include <string>
#include <vector>

#include "smorph/dataset.hpp"
#include "smorph/distill.hpp"
#include "smorph/hpm.hpp"
#include "smorph/tune.hpp"

namespace smorph {

// Fully-resolved run configuration. Every stage validates it before touching
// data and echoes it next to its artifacts.
struct RunConfig {
    std::string dataset_dir;
    std::string out_dir;
    int fold = 0;
    int folds_k = 5;

    // hpm
    int hierarchy_levels = 2;
    double height_tolerance = 0.15;
    double dmax_factor = 1.5;

    // network
    int input_size = 64;
    std::vector<int> stage_channels = {16, 32, 64};
    int decoder_channels = 32;

    // distillation (reference recipe: alpha=beta=1, Adam 1e-4, decay at 12/19)
    double alpha = 1.0;
    double beta = 1.0;
    double ema_decay = 0.99;
    int distill_batch = 16;
    int fine_iterations = 300;
    int coarse_iterations = 200;
    double distill_lr = 1e-4;
    std::vector<int> distill_milestones = {12, 19};
    std::string distill_augment = "aid-full";
    std::string coarse_augment = "scian-mild";
    double teacher_threshold = 0.5;

    // soft-tuning (reference recipe: lambda=0.85, Adam 1.5e-4, decay at 14/23)
    double lambda = 0.85;
    int tune_batch = 16;
    int tune_epochs = 30;
    int curriculum_start = 15;
    int curriculum_end = 0;
    double tune_lr = 1.5e-4;
    std::vector<int> tune_milestones = {14, 23};
    std::string tune_augment = "scian-mild";
    std::string tta_policy = "mild6";
    double val_fraction = 0.0;
    int eval_mask_dilations = 0;
    bool skip_pretrain = false;

    uint64_t seed = 1;
    int threads = 0;  // 0 = hardware concurrency

    void validate() const;
    int effective_threads() const;
    std::string fold_dir(int f) const;
    std::string stage_dir(int f, const std::string& stage) const;
    NetConfig net_config(int num_classes, int input_channels) const;
    HpmParams hpm_params() const;
};

void write_resolved_config(const RunConfig& cfg, const std::string& stage_path);

// Stage runners. Artifacts land under <out>/fold<k>/<stage>/.
void run_masks(const RunConfig& cfg);
void run_pretrain(const RunConfig& cfg);
void run_tune(const RunConfig& cfg);
Metrics run_eval(const RunConfig& cfg);
void run_overlay(const RunConfig& cfg, const std::string& crop_id);

struct RunAllResult {
    std::vector<int> folds;
    std::vector<Metrics> per_fold;
    Metrics mean;
    Metrics stddev;
};

// Chains masks -> pretrain -> tune -> eval for each requested fold and writes
// runs.csv plus a mean/std summary.
RunAllResult run_all(const RunConfig& cfg, const std::vector<int>& folds = {});

// Artifact loaders shared by stages and tests.
struct MaskArtifacts {
    ImageCrop aligned;
    MaskHierarchy hierarchy;
    BinaryMask nuclear;
    double rotation_applied = 0.0;
    uint32_t flags = 0;
};
MaskArtifacts load_mask_artifacts(const std::string& masks_dir, const std::string& id);

// Gray encoding of a hierarchy: innermost level i maps to 255 - 64*i,
// background to 0.
ImageCrop hierarchy_to_image(const MaskHierarchy& hier);
std::vector<BinaryMask> hierarchy_layers_from_image(const ImageCrop& img, int h);

}  // namespace smorph

#endif
