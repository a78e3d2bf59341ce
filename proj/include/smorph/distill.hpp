#ifndef SMORPH_DISTILL_HPP
#define SMORPH_DISTILL_HPP

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "smorph/checkpoint.hpp"
#include "smorph/hierarchy.hpp"
#include "smorph/net.hpp"
#include "smorph/optim.hpp"
#include "smorph/warp.hpp"

namespace smorph {

// Student/teacher twins: identical architectures, teacher initialized as a
// copy of the student and only ever updated through the EMA.
struct StudentTeacherPair {
    Network student;
    Network teacher;
    double ema_decay = 0.99;

    static StudentTeacherPair make(const NetConfig& cfg, uint64_t seed,
                                   double ema_decay = 0.99) {
        StudentTeacherPair pair;
        pair.student = Network(cfg, seed);
        pair.teacher = pair.student;
        pair.ema_decay = ema_decay;
        return pair;
    }
};

// One crop prepared for distillation: the aligned crop and its pseudo-mask
// hierarchy at source resolution, plus caches at the network input size.
struct DistillSample {
    std::string id;
    ImageCrop aligned;
    MaskHierarchy hierarchy;
    ImageCrop resized;   // network input size
    BinaryMask fg;       // innermost layer at input size
    BinaryMask outer;    // outermost layer at input size
};

DistillSample make_distill_sample(std::string id, ImageCrop aligned,
                                  MaskHierarchy hierarchy, int input_size);

struct DistillConfig {
    LossWeights weights;  // alpha = beta = 1
    double ema_decay = 0.99;
    int batch_size = 16;
    int fine_iterations = 300;
    int coarse_iterations = 200;
    double lr = 1e-4;  // default Adam, step decay at epochs 12 and 19
    StepDecaySchedule decay{{12, 19}, 0.1};
    AugmentationPolicy augment = AugmentationPolicy::aid_full();
    AugmentationPolicy coarse_augment = AugmentationPolicy::scian_mild();
    float teacher_mask_threshold = 0.5f;
    uint64_t seed = 1;
    int threads = 1;
};

struct IterationLog {
    int iteration = 0;
    double seg = 0.0;
    double con = 0.0;
    double rot = 0.0;
    double lr = 0.0;
};

// Called after each optimizer + EMA step.
using DistillObserver =
    std::function<void(int iteration, const Network& student, const Network& teacher)>;

// Fine distillation: per iteration draw two augmentations per crop, train the
// student on alpha*L_seg + beta*L_con against the EMA teacher, then update
// the teacher. Throws NumericError on NaN loss with the pair left at the last
// finished iteration.
std::vector<IterationLog> fine_distill(StudentTeacherPair& pair,
                                       const std::vector<DistillSample>& data,
                                       const DistillConfig& cfg,
                                       const DistillObserver& observer = nullptr);

// Coarse distillation: four-way rotation prediction on aligned crops through
// the encoder and rotation head; the EMA keeps running.
std::vector<IterationLog> coarse_distill(StudentTeacherPair& pair,
                                         const std::vector<DistillSample>& data,
                                         const DistillConfig& cfg,
                                         const DistillObserver& observer = nullptr);

// The (deterministic, seeded) quarter-turn label drawn for a batch slot of a
// coarse-distillation iteration.
int coarse_rotation_label(uint64_t seed, int iteration, int slot);

struct TeacherMaskEntry {
    BinaryMask mask;  // source crop dimensions
    uint32_t flags = 0;
};

struct TeacherMaskStore {
    std::map<std::string, TeacherMaskEntry> entries;
    float threshold = 0.5f;

    const BinaryMask* find(const std::string& id) const {
        auto it = entries.find(id);
        return it == entries.end() ? nullptr : &it->second.mask;
    }
    void save(const std::string& path) const;
    static TeacherMaskStore load(const std::string& path);
};

// Teacher forward on the unaugmented crops, binarized and reduced to the
// largest component; empty predictions fall back to the crop's innermost
// pseudo-mask with a flag.
TeacherMaskStore export_teacher_masks(const StudentTeacherPair& pair,
                                      const std::vector<DistillSample>& data,
                                      float threshold, int threads = 1);

}  // namespace smorph

#endif
