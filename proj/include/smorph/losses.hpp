#ifndef SMORPH_LOSSES_HPP
#define SMORPH_LOSSES_HPP

#include <array>
#include <vector>

#include "smorph/hierarchy.hpp"
#include "smorph/warp.hpp"

namespace smorph {

inline constexpr float kProbEps = 1e-7f;

// Per-pixel foreground probability map; values clamp to (eps, 1-eps) so logs
// stay finite on exact-0/1 inputs.
struct ProbMap {
    int height = 0;
    int width = 0;
    std::vector<float> v;

    ProbMap() = default;
    ProbMap(int h, int w, float fill = 0.5f)
        : height(h), width(w), v(size_t(h) * size_t(w), fill) {
        clamp();
    }
    explicit ProbMap(const FloatPlane& p) : height(p.height), width(p.width), v(p.v) {
        clamp();
    }
    float at(int y, int x) const { return v[size_t(y) * width + x]; }
    float& at(int y, int x) { return v[size_t(y) * width + x]; }
    FloatPlane plane() const {
        FloatPlane p(height, width);
        p.v = v;
        return p;
    }
    void clamp();
};

struct SoftLabel {
    int c1 = 0;             // majority class
    int c2 = 0;             // minority class
    bool consensus = true;  // consensus <=> c1 == c2
    float lambda = 0.85f;   // majority weight

    static SoftLabel consensus_of(int c, float lambda = 0.85f) {
        return SoftLabel{c, c, true, lambda};
    }
    static SoftLabel split(int maj, int min, float lambda = 0.85f) {
        return SoftLabel{maj, min, false, lambda};
    }
};

struct LossWeights {
    float alpha = 1.0f;
    float beta = 1.0f;
};

struct SegLossResult {
    double loss = 0.0;
    FloatPlane grad;  // d(loss)/d(prob), zero on ignored pixels
    bool empty_confident_set = false;
};

// Partial cross entropy: the innermost mask layer is foreground truth, the
// complement of the outermost layer is background truth, and every other
// hierarchy pixel is ignored. Normalized by the full pixel count.
SegLossResult seg_partial_ce(const ProbMap& pred, const MaskHierarchy& hier);

struct ConsistencyResult {
    double loss = 0.0;
    FloatPlane grad_student;  // d(loss)/d(student map), in the augmented frame
    bool empty_valid_region = false;
};

// Mean squared difference between the two predictions mapped back to the
// original frame, over pixels valid under both inversions. The teacher is a
// fixed target: gradient flows to the student map only.
ConsistencyResult consistency(const ProbMap& student, const ProbMap& teacher,
                              const AugmentationRecord& rec_student,
                              const AugmentationRecord& rec_teacher);

struct VectorLossResult {
    double loss = 0.0;
    std::vector<float> grad;
};

// Softmax cross-entropy over the four right-angle rotation classes;
// gradient is softmax minus one-hot, with respect to the logits.
VectorLossResult rotation_ce(const std::array<float, 4>& logits, int target);

// Soft cross-entropy over class probabilities (Eq. 4 as a minimized NLL).
// Consensus labels reduce exactly to vanilla cross-entropy on c1.
VectorLossResult soft_ce(const std::vector<float>& probs, const SoftLabel& label);

double fine_total(double seg, double con, const LossWeights& w);

// Shared softmax helper (clamped to the ProbMap epsilon range).
std::vector<float> softmax(const std::vector<float>& logits);

}  // namespace smorph

#endif
